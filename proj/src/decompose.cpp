#include "localdeg/decompose.hpp"

#include <string>

namespace localdeg {

DegreeDecomposition decompose_indegree(const LabeledDigraph& graph, int tier,
                                       std::optional<std::uint16_t> scope_category) {
    if (tier != 1 && tier != 2) throw GraphError("tier must be 1 or 2");
    if (scope_category && tier != 2)
        throw GraphError("a category scope only applies to tier-2 decompositions");

    DegreeDecomposition d;
    d.tier = tier;
    d.scope_category = scope_category;

    if (scope_category) {
        auto vs = graph.vertices_in(1, *scope_category);  // throws on unknown code
        if (vs.empty()) throw GraphError("empty scope category");
        d.vertices.assign(vs.begin(), vs.end());
    } else {
        d.vertices.resize(graph.vertex_count());
        for (VertexId v = 0; v < graph.vertex_count(); ++v) d.vertices[v] = v;
    }

    const std::size_t n = d.vertices.size();
    d.global_in.assign(n, 0);
    d.internal_in.assign(n, 0);
    d.external_in.assign(n, 0);

    for (std::size_t i = 0; i < n; ++i) {
        const VertexId v = d.vertices[i];
        const std::uint16_t own = graph.label(v).code(tier);
        for (VertexId u : graph.in_neighbors(v)) {
            if (scope_category && graph.label(u).tier1 != *scope_category) continue;
            ++d.global_in[i];
            if (graph.label(u).code(tier) == own)
                ++d.internal_in[i];
            else
                ++d.external_in[i];
        }
    }
    return d;
}

ChannelVector channel_indegree(const LabeledDigraph& graph, GroupRef dest, GroupRef source,
                               std::optional<std::uint16_t> scope_category) {
    auto category_of = [](const GroupRef& g) {
        return g.tier == 1 ? g.code : static_cast<std::uint16_t>(g.code / 10);
    };
    if (scope_category) {
        if (category_of(dest) != *scope_category || category_of(source) != *scope_category)
            throw GraphError("channel " + to_string(source) + " -> " + to_string(dest) +
                             " lies outside scope category " + std::to_string(*scope_category));
    }
    if (!graph.has_group(source.tier, source.code))
        throw GraphError("unknown " + to_string(source));

    ChannelVector c;
    c.dest = dest;
    c.source = source;
    auto vs = graph.vertices_in(dest.tier, dest.code);  // throws on unknown code
    c.vertices.assign(vs.begin(), vs.end());
    c.counts.assign(c.vertices.size(), 0);

    for (std::size_t i = 0; i < c.vertices.size(); ++i)
        for (VertexId u : graph.in_neighbors(c.vertices[i]))
            if (graph.label(u).code(source.tier) == source.code) ++c.counts[i];
    return c;
}

double externally_popular_fraction(const DegreeDecomposition& d) {
    if (d.vertices.empty()) return 0.0;
    std::size_t popular = 0;
    for (auto e : d.external_in) popular += (e >= 1);
    return static_cast<double>(popular) / static_cast<double>(d.vertices.size());
}

}  // namespace localdeg
