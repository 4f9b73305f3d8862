#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "localdeg/graph.hpp"

namespace localdeg {

// Per-vertex indegree split at one tier: edges arriving from the vertex's own
// group (internal) versus from any other group (external). When scoped to a
// category, only edges with both endpoints inside that category count at all.
struct DegreeDecomposition {
    int tier = 1;
    std::optional<std::uint16_t> scope_category;
    std::vector<VertexId> vertices;  // vertices in scope, ascending dense id
    std::vector<std::uint32_t> global_in;
    std::vector<std::uint32_t> internal_in;
    std::vector<std::uint32_t> external_in;
};

// Indegree of one group's vertices counting only edges whose source lies in
// another fixed group. Destination and source tiers may differ.
struct ChannelVector {
    GroupRef dest;
    GroupRef source;
    std::vector<VertexId> vertices;  // dest-group vertices, ascending dense id
    std::vector<std::uint32_t> counts;
};

DegreeDecomposition decompose_indegree(const LabeledDigraph& graph, int tier,
                                       std::optional<std::uint16_t> scope_category = {});

ChannelVector channel_indegree(const LabeledDigraph& graph, GroupRef dest, GroupRef source,
                               std::optional<std::uint16_t> scope_category = {});

// Fraction of scope vertices with at least one external in-link.
double externally_popular_fraction(const DegreeDecomposition& d);

}  // namespace localdeg
