#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace localdeg {

using VertexId = std::uint32_t;

/// Two-tier group membership of a vertex: tier1 is the category code,
/// tier2 the two-digit subcategory code whose leading digit is the category.
struct GroupLabel {
    std::uint16_t tier1 = 0;
    std::uint16_t tier2 = 0;

    /// Builds a label from a two-digit subcategory code (tier1 = code / 10).
    static GroupLabel from_subcategory(int subcategory);

    std::uint16_t code(int tier) const { return tier == 1 ? tier1 : tier2; }
    bool consistent() const { return tier2 / 10 == tier1 && tier1 > 0; }

    friend bool operator==(const GroupLabel&, const GroupLabel&) = default;
};

/// A group in one of the two tiers: (tier, group code).
struct GroupRef {
    int tier = 1;
    std::uint16_t code = 0;

    friend bool operator==(const GroupRef&, const GroupRef&) = default;
};

std::string to_string(const GroupRef& g);

class GraphError : public std::runtime_error {
  public:
    explicit GraphError(const std::string& what) : std::runtime_error(what) {}
};

/// Group-by-group edge counts at one tier. Rows are source groups, columns
/// destination groups; group codes are kept sorted ascending.
class EdgeMatrix {
  public:
    EdgeMatrix() = default;
    EdgeMatrix(int tier, std::vector<std::uint16_t> codes);

    int tier() const { return tier_; }
    const std::vector<std::uint16_t>& codes() const { return codes_; }
    std::size_t group_count() const { return codes_.size(); }

    std::size_t index_of(std::uint16_t code) const;

    std::uint64_t at(std::uint16_t src_code, std::uint16_t dst_code) const;
    std::uint64_t& cell(std::size_t src_idx, std::size_t dst_idx);
    std::uint64_t cell(std::size_t src_idx, std::size_t dst_idx) const;

    /// Sum of all cells.
    std::uint64_t total() const;
    /// Sum of row src_idx, i.e. the total outdegree of that group.
    std::uint64_t row_sum(std::size_t src_idx) const;

    friend bool operator==(const EdgeMatrix&, const EdgeMatrix&) = default;

  private:
    int tier_ = 1;
    std::vector<std::uint16_t> codes_;
    std::vector<std::uint64_t> counts_;
};

/// Immutable directed graph whose vertices carry two-tier group labels.
///
/// Stores forward and reverse adjacency in compressed sparse form plus a
/// per-tier index from group code to member vertices. Vertex ids are dense;
/// the mapping back to the original external identifiers is kept alongside.
/// After construction the structure never changes, so concurrent readers
/// need no synchronization.
class LabeledDigraph {
  public:
    LabeledDigraph() = default;

    /// Assembles a graph from dense-id edges. `labels` must cover all `n`
    /// vertices; `original_ids` maps dense id to external id (identity if
    /// empty). Rejects self-loops, duplicate edges and out-of-range
    /// endpoints.
    static LabeledDigraph from_edges(std::size_t n, std::vector<GroupLabel> labels,
                                     const std::vector<std::pair<VertexId, VertexId>>& edges,
                                     std::vector<std::int64_t> original_ids = {});

    std::size_t vertex_count() const { return labels_.size(); }
    std::size_t edge_count() const { return fwd_dst_.size(); }

    std::span<const VertexId> out_neighbors(VertexId v) const {
        return {fwd_dst_.data() + fwd_off_[v], fwd_dst_.data() + fwd_off_[v + 1]};
    }
    std::span<const VertexId> in_neighbors(VertexId v) const {
        return {rev_src_.data() + rev_off_[v], rev_src_.data() + rev_off_[v + 1]};
    }
    std::size_t outdegree(VertexId v) const { return fwd_off_[v + 1] - fwd_off_[v]; }
    std::size_t indegree(VertexId v) const { return rev_off_[v + 1] - rev_off_[v]; }

    const GroupLabel& label(VertexId v) const { return labels_[v]; }
    std::int64_t original_id(VertexId v) const { return original_ids_[v]; }

    /// Sorted group codes present at a tier.
    const std::vector<std::uint16_t>& group_codes(int tier) const;
    /// Vertices belonging to the group; throws GraphError for unknown codes.
    std::span<const VertexId> vertices_in(int tier, std::uint16_t code) const;
    bool has_group(int tier, std::uint16_t code) const;

    /// Position of `code` within group_codes(tier); throws if unknown.
    std::size_t group_position(int tier, std::uint16_t code) const;
    /// Position of v's group within group_codes(tier); O(1).
    std::uint16_t vertex_group_position(int tier, VertexId v) const {
        return tier == 1 ? pos1_[v] : pos2_[v];
    }

    template <class F>
    void for_each_edge(F&& f) const {
        for (VertexId u = 0; u < labels_.size(); ++u)
            for (VertexId v : out_neighbors(u)) f(u, v);
    }

  private:
    struct TierIndex {
        std::vector<std::uint16_t> codes;        // sorted
        std::vector<std::uint64_t> offsets;      // codes.size()+1
        std::vector<VertexId> vertices;          // grouped by code
    };

    void build_indices();
    const TierIndex& tier_index(int tier) const;

    std::vector<GroupLabel> labels_;
    std::vector<std::int64_t> original_ids_;
    std::vector<std::uint64_t> fwd_off_, rev_off_;
    std::vector<VertexId> fwd_dst_, rev_src_;
    TierIndex tiers_[2];
    std::vector<std::uint16_t> pos1_, pos2_;     // per-vertex group position per tier

    friend class GraphBuilder;
};

/// How edge anomalies are treated while building.
enum class EdgePolicy {
    Strict,          ///< self-loops and duplicates are errors
    FilterAndCount,  ///< they are dropped and counted
};

struct BuildCounts {
    std::uint64_t dropped_self_loops = 0;
    std::uint64_t dropped_duplicates = 0;
    std::uint64_t dropped_unlabeled = 0;
};

/// Incremental construction from externally-identified vertices. Labels must
/// be registered before the edges that use them. External ids are remapped
/// to dense indices; the bijection is preserved in the resulting graph.
class GraphBuilder {
  public:
    explicit GraphBuilder(EdgePolicy policy = EdgePolicy::Strict, bool include_isolated = true);

    void set_label(std::int64_t original_id, GroupLabel label);
    bool has_label(std::int64_t original_id) const;
    std::size_t label_count() const { return labels_by_id_.size(); }

    void add_edge(std::int64_t src_original, std::int64_t dst_original);

    /// Finalizes the graph. Duplicate detection happens here; in Strict
    /// mode a duplicate raises GraphError naming the original ids.
    LabeledDigraph build();

    const BuildCounts& counts() const { return counts_; }

  private:
    EdgePolicy policy_;
    bool include_isolated_;
    std::map<std::int64_t, GroupLabel> labels_by_id_;
    std::vector<std::pair<std::int64_t, std::int64_t>> edges_;
    BuildCounts counts_;
};

/// Builds a graph from an explicit edge list and label map (strict mode:
/// unlabeled endpoints, self-loops and duplicates are all errors). The
/// vertex set is the domain of `labels`, so isolated labeled vertices are
/// kept.
LabeledDigraph build_graph(const std::vector<std::pair<std::int64_t, std::int64_t>>& edges,
                           const std::map<std::int64_t, GroupLabel>& labels);

/// Tallies the group-to-group edge counts of the graph at a tier.
EdgeMatrix edge_matrix(const LabeledDigraph& graph, int tier);

/// Collapses a tier-2 matrix onto tier 1 by summing subcategory cells over
/// the category pairs they belong to.
EdgeMatrix aggregate_to_tier1(const EdgeMatrix& tier2_matrix);

}  // namespace localdeg
