#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "localdeg/correlate.hpp"
#include "localdeg/decompose.hpp"
#include "testutil.hpp"

using namespace localdeg;

namespace {

// Textbook two-pass formula: means first, then centered sums. The reference
// the one-pass implementation must match.
std::optional<double> two_pass_pearson(const std::vector<double>& x,
                                       const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale) {
    std::uniform_real_distribution<double> dist(0.0, scale);
    std::vector<double> v(n);
    for (auto& e : v) e = dist(rng);
    return v;
}

}  // namespace

TEST_CASE("self-correlation is exactly one") {
    std::vector<double> v = {1, 5, 2, 8, 3, 3, 9};
    auto p = pearson(v, v);
    REQUIRE(p.has_value());
    CHECK(*p == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("one-pass matches the two-pass oracle") {
    std::mt19937_64 rng(7);
    SUBCASE("many short vectors") {
        for (int trial = 0; trial < 200; ++trial) {
            CAPTURE(trial);
            const std::size_t n = 2 + rng() % 300;
            auto x = random_vector(rng, n, 1e4);
            auto y = random_vector(rng, n, 1e4);
            auto got = pearson(x, y);
            auto want = two_pass_pearson(x, y);
            REQUIRE(got.has_value() == want.has_value());
            if (want) CHECK(*got == doctest::Approx(*want).epsilon(1e-12));
        }
    }
    SUBCASE("one long vector") {
        auto x = random_vector(rng, 1'000'000, 1e4);
        auto y = random_vector(rng, 1'000'000, 1e4);
        // correlated pair stresses the co-moment path too
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.6 * x[i] + 0.4 * y[i];
        auto got = pearson(x, y);
        auto want = two_pass_pearson(x, y);
        REQUIRE(got.has_value());
        CHECK(*got == doctest::Approx(*want).epsilon(1e-12));
    }
}

TEST_CASE("symmetry, affine invariance, and the unit bound") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        CAPTURE(trial);
        const std::size_t n = 2 + rng() % 100;
        auto x = random_vector(rng, n, 100.0);
        auto y = random_vector(rng, n, 100.0);
        auto p = pearson(x, y);
        if (!p) continue;
        CHECK(std::fabs(*p) <= 1.0);
        CHECK(*pearson(y, x) == doctest::Approx(*p).epsilon(1e-13));

        auto scaled = x;
        for (auto& e : scaled) e = 3.5 * e + 11.0;
        CHECK(*pearson(scaled, y) == doctest::Approx(*p).epsilon(1e-10));
    }
}

TEST_CASE("zero variance reports undefined rather than a number") {
    std::vector<double> constant(10, 4.0);
    std::vector<double> varying = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK_FALSE(pearson(constant, varying).has_value());
    CHECK_FALSE(pearson(varying, constant).has_value());
    CHECK_FALSE(pearson(constant, constant).has_value());
}

TEST_CASE("bad shapes raise") {
    std::vector<double> a = {1, 2, 3};
    std::vector<double> b = {1, 2};
    CHECK_THROWS_WITH_AS((void)pearson(a, b), doctest::Contains("lengths differ"),
                         std::invalid_argument);
    std::vector<double> single = {1.0};
    CHECK_THROWS_WITH_AS((void)pearson(single, single), doctest::Contains("at least 2"),
                         std::invalid_argument);
}

TEST_CASE("suite on a graph without cross-group edges") {
    // two groups, edges strictly inside each; vary the indegrees so the
    // global/internal pair has real variance
    auto lab1 = GroupLabel::from_subcategory(11);
    auto lab2 = GroupLabel::from_subcategory(21);
    std::map<std::int64_t, GroupLabel> labels{{1, lab1}, {2, lab1}, {3, lab1},
                                              {4, lab2}, {5, lab2}, {6, lab2}};
    std::vector<std::pair<std::int64_t, std::int64_t>> edges = {
        {2, 1}, {3, 1}, {3, 2}, {5, 4}, {6, 4}};
    auto g = build_graph(edges, labels);

    auto suite = correlation_suite(decompose_indegree(g, 1));
    REQUIRE(suite[0].pcc.has_value());
    CHECK(*suite[0].pcc == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(suite[0].label_a == "global");
    CHECK(suite[0].label_b == "internal");
    CHECK_FALSE(suite[1].pcc.has_value());  // external is identically zero
    CHECK_FALSE(suite[2].pcc.has_value());
    for (const auto& r : suite) CHECK(r.n == 6);
}

TEST_CASE("suite matches direct pearson on the decomposition vectors") {
    std::mt19937_64 rng(31);
    testutil::RandomGraphSpec spec;
    spec.max_vertices = 60;
    spec.max_edges = 300;
    for (int trial = 0; trial < 8; ++trial) {
        CAPTURE(trial);
        auto g = testutil::random_graph(rng, spec);
        for (int tier : {1, 2}) {
            auto d = decompose_indegree(g, tier);
            auto suite = correlation_suite(d);
            auto direct0 = pearson(d.global_in, d.internal_in);
            REQUIRE(suite[0].pcc.has_value() == direct0.has_value());
            if (direct0) CHECK(*suite[0].pcc == doctest::Approx(*direct0));
            auto direct2 = pearson(d.internal_in, d.external_in);
            REQUIRE(suite[2].pcc.has_value() == direct2.has_value());
            if (direct2) CHECK(*suite[2].pcc == doctest::Approx(*direct2));
        }
    }
}

TEST_CASE("identical channels correlate to one") {
    // the channel vector must actually vary: vertex 1 hears twice from group
    // 12, vertex 2 once, vertex 3 never
    auto l11 = GroupLabel::from_subcategory(11);
    auto l12 = GroupLabel::from_subcategory(12);
    std::map<std::int64_t, GroupLabel> labels{{1, l11}, {2, l11}, {3, l11},
                                              {10, l12}, {11, l12}};
    std::vector<std::pair<std::int64_t, std::int64_t>> edges = {
        {10, 1}, {11, 1}, {10, 2}, {1, 3}};
    auto g = build_graph(edges, labels);
    auto r = pairwise_channel_correlation(g, GroupRef{2, 11}, GroupRef{2, 12},
                                          GroupRef{2, 12});
    REQUIRE(r.pcc.has_value());
    CHECK(*r.pcc == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.label_a == "channel(12)");
    CHECK(r.label_b == "channel(12)");
    CHECK(r.n == 3);
}

TEST_CASE("channel correlation equals pearson over the channel vectors") {
    std::mt19937_64 rng(77);
    testutil::RandomGraphSpec spec;
    spec.max_vertices = 80;
    spec.max_edges = 500;
    for (int trial = 0; trial < 6; ++trial) {
        CAPTURE(trial);
        auto g = testutil::random_graph(rng, spec);
        auto m1 = edge_matrix(g, 1);
        if (m1.group_count() < 3) continue;
        const auto& codes = m1.codes();
        GroupRef dest{1, codes[0]}, sa{1, codes[1]}, sb{1, codes[2]};
        if (g.vertices_in(1, dest.code).size() < 2) continue;  // pearson needs 2
        auto r = pairwise_channel_correlation(g, dest, sa, sb);
        auto ca = channel_indegree(g, dest, sa);
        auto cb = channel_indegree(g, dest, sb);
        auto direct = pearson(ca.counts, cb.counts);
        CHECK(r.n == ca.counts.size());
        REQUIRE(r.pcc.has_value() == direct.has_value());
        if (direct) CHECK(*r.pcc == doctest::Approx(*direct).epsilon(1e-13));
    }
}

TEST_CASE("in-link restriction drops silent vertices") {
    // group 11 receives from 12 and 21 at some vertices only; vertex 4 of
    // group 11 hears from neither source
    auto l11 = GroupLabel::from_subcategory(11);
    auto l12 = GroupLabel::from_subcategory(12);
    auto l21 = GroupLabel::from_subcategory(21);
    std::map<std::int64_t, GroupLabel> labels{{1, l11}, {2, l11}, {3, l11}, {4, l11},
                                              {10, l12}, {11, l12}, {20, l21}, {21, l21}};
    std::vector<std::pair<std::int64_t, std::int64_t>> edges = {
        {10, 1}, {11, 1}, {20, 1}, {10, 2}, {20, 3}, {21, 3}, {11, 4}};
    // vertex id 4 gets an in-link only via... nothing: give it none at all
    edges.pop_back();
    edges.push_back({1, 4});  // internal edge keeps vertex 4 non-isolated
    auto g = build_graph(edges, labels);

    auto all = pairwise_channel_correlation(g, GroupRef{2, 11}, GroupRef{2, 12},
                                            GroupRef{2, 21});
    auto active = pairwise_channel_correlation(g, GroupRef{2, 11}, GroupRef{2, 12},
                                               GroupRef{2, 21}, {}, true);
    CHECK(all.n == 4);
    CHECK(active.n == 3);  // the vertex with zero from both sources is gone
}

TEST_CASE("reports serialize undefined as null") {
    CorrelationReport r;
    r.label_a = "internal";
    r.label_b = "external";
    r.n = 12;
    nlohmann::json j;
    to_json(j, r);
    CHECK(j["pcc"].is_null());
    CHECK(j["pair"] == "internal-external");
    CHECK(j["n"] == 12);

    r.pcc = -0.25;
    to_json(j, r);
    CHECK(j["pcc"] == doctest::Approx(-0.25));
}
