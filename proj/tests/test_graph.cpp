#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "localdeg/graph.hpp"
#include "testutil.hpp"

using namespace localdeg;

TEST_CASE("two-vertex cross-group graph") {
    std::map<std::int64_t, GroupLabel> labels{{7, GroupLabel::from_subcategory(11)},
                                              {9, GroupLabel::from_subcategory(21)}};
    auto g = build_graph({{7, 9}}, labels);
    CHECK(g.vertex_count() == 2);
    CHECK(g.edge_count() == 1);
    // dense ids follow ascending original id: 7 -> 0, 9 -> 1
    CHECK(g.original_id(0) == 7);
    CHECK(g.original_id(1) == 9);
    CHECK(g.indegree(1) == 1);
    CHECK(g.indegree(0) == 0);
    CHECK(g.outdegree(0) == 1);
    CHECK(g.label(1).tier1 == 2);
}

TEST_CASE("build_graph rejections") {
    auto lab = GroupLabel::from_subcategory(11);
    std::map<std::int64_t, GroupLabel> labels{{1, lab}, {2, lab}};

    CHECK_THROWS_WITH_AS(build_graph({{1, 3}}, labels), doctest::Contains("3"), GraphError);
    CHECK_THROWS_AS(build_graph({{1, 1}}, labels), GraphError);
    CHECK_THROWS_AS(build_graph({{1, 2}, {1, 2}}, labels), GraphError);
}

TEST_CASE("fixture adjacency matches exhaustive edge scan") {
    auto f = testutil::small_fixture();
    auto g = build_graph(f.edges, f.labels);
    CHECK(g.vertex_count() == 6);
    CHECK(g.edge_count() == 9);

    for (VertexId v = 0; v < 6; ++v) {
        std::vector<VertexId> out_expect, in_expect;
        for (auto [s, d] : f.edges) {
            if (s == v) out_expect.push_back(static_cast<VertexId>(d));
            if (d == v) in_expect.push_back(static_cast<VertexId>(s));
        }
        std::sort(out_expect.begin(), out_expect.end());
        std::sort(in_expect.begin(), in_expect.end());
        auto out = g.out_neighbors(v);
        auto in = g.in_neighbors(v);
        CHECK(std::vector<VertexId>(out.begin(), out.end()) == out_expect);
        std::vector<VertexId> in_sorted(in.begin(), in.end());
        std::sort(in_sorted.begin(), in_sorted.end());
        CHECK(in_sorted == in_expect);
    }
}

TEST_CASE("single-group edge matrix is 1x1 with |E|") {
    auto lab = GroupLabel::from_subcategory(31);
    std::map<std::int64_t, GroupLabel> labels;
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    for (int i = 0; i < 5; ++i) labels[i] = lab;
    for (int i = 0; i < 4; ++i) edges.push_back({i, i + 1});
    auto g = build_graph(edges, labels);

    for (int tier : {1, 2}) {
        auto m = edge_matrix(g, tier);
        CHECK(m.group_count() == 1);
        CHECK(m.total() == 4);
    }
}

TEST_CASE("fixture edge matrix equals brute-force tally") {
    auto f = testutil::small_fixture();
    auto g = build_graph(f.edges, f.labels);

    for (int tier : {1, 2}) {
        auto m = edge_matrix(g, tier);
        auto tally = testutil::brute_force_group_tally(g, tier);
        CHECK(m.total() == g.edge_count());
        std::uint64_t listed = 0;
        for (auto& [pair, count] : tally) {
            CHECK(m.at(static_cast<std::uint16_t>(pair.first),
                       static_cast<std::uint16_t>(pair.second)) == count);
            listed += count;
        }
        CHECK(listed == m.total());
    }
}

TEST_CASE("properties on random graphs") {
    std::mt19937_64 rng(20240817);
    for (int trial = 0; trial < 12; ++trial) {
        auto g = testutil::random_graph(rng, {.max_vertices = 600, .max_edges = 4000});

        CAPTURE(trial);
        // transpose consistency
        std::vector<std::size_t> out_count(g.vertex_count(), 0), in_count(g.vertex_count(), 0);
        g.for_each_edge([&](VertexId u, VertexId v) {
            ++out_count[u];
            ++in_count[v];
        });
        for (VertexId v = 0; v < g.vertex_count(); ++v) {
            REQUIRE(g.outdegree(v) == out_count[v]);
            REQUIRE(g.indegree(v) == in_count[v]);
        }

        // tier-2 matrix aggregates exactly to tier 1
        auto m1 = edge_matrix(g, 1);
        auto m2 = edge_matrix(g, 2);
        CHECK(aggregate_to_tier1(m2) == m1);
        CHECK(m1.total() == g.edge_count());
        CHECK(m2.total() == g.edge_count());

        // group partitions cover the vertex set at each tier
        for (int tier : {1, 2}) {
            std::size_t covered = 0;
            for (auto code : g.group_codes(tier)) covered += g.vertices_in(tier, code).size();
            CHECK(covered == g.vertex_count());
        }

        // row sums equal group outdegrees
        for (std::size_t i = 0; i < m1.group_count(); ++i) {
            std::uint64_t outdeg = 0;
            for (VertexId v : g.vertices_in(1, m1.codes()[i])) outdeg += g.outdegree(v);
            CHECK(m1.row_sum(i) == outdeg);
        }
    }
}

TEST_CASE("unknown group code raises") {
    auto f = testutil::small_fixture();
    auto g = build_graph(f.edges, f.labels);
    CHECK_THROWS_AS(g.vertices_in(1, 5), GraphError);
    CHECK_THROWS_AS((void)edge_matrix(g, 1).at(1, 9), GraphError);
}
