#include "localdeg/graph.hpp"

#include <algorithm>
#include <cassert>

namespace localdeg {

GroupLabel GroupLabel::from_subcategory(int subcategory) {
    if (subcategory < 10 || subcategory > 99)
        throw GraphError("subcategory code must be two digits, got " + std::to_string(subcategory));
    return GroupLabel{static_cast<std::uint16_t>(subcategory / 10),
                      static_cast<std::uint16_t>(subcategory)};
}

std::string to_string(const GroupRef& g) {
    return "tier" + std::to_string(g.tier) + ":" + std::to_string(g.code);
}

EdgeMatrix::EdgeMatrix(int tier, std::vector<std::uint16_t> codes)
    : tier_(tier), codes_(std::move(codes)), counts_(codes_.size() * codes_.size(), 0) {
    assert(std::is_sorted(codes_.begin(), codes_.end()));
}

std::size_t EdgeMatrix::index_of(std::uint16_t code) const {
    auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
    if (it == codes_.end() || *it != code)
        throw GraphError("unknown group code " + std::to_string(code) + " in tier-" +
                         std::to_string(tier_) + " edge matrix");
    return static_cast<std::size_t>(it - codes_.begin());
}

std::uint64_t EdgeMatrix::at(std::uint16_t src_code, std::uint16_t dst_code) const {
    return counts_[index_of(src_code) * codes_.size() + index_of(dst_code)];
}

std::uint64_t& EdgeMatrix::cell(std::size_t src_idx, std::size_t dst_idx) {
    return counts_[src_idx * codes_.size() + dst_idx];
}

std::uint64_t EdgeMatrix::cell(std::size_t src_idx, std::size_t dst_idx) const {
    return counts_[src_idx * codes_.size() + dst_idx];
}

std::uint64_t EdgeMatrix::total() const {
    std::uint64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
}

std::uint64_t EdgeMatrix::row_sum(std::size_t src_idx) const {
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < codes_.size(); ++j) s += cell(src_idx, j);
    return s;
}

namespace {

std::uint64_t pack(VertexId u, VertexId v) {
    return (static_cast<std::uint64_t>(u) << 32) | v;
}

}  // namespace

LabeledDigraph LabeledDigraph::from_edges(std::size_t n, std::vector<GroupLabel> labels,
                                          const std::vector<std::pair<VertexId, VertexId>>& edges,
                                          std::vector<std::int64_t> original_ids) {
    if (labels.size() != n)
        throw GraphError("label vector size does not match vertex count");
    if (original_ids.empty()) {
        original_ids.resize(n);
        for (std::size_t i = 0; i < n; ++i) original_ids[i] = static_cast<std::int64_t>(i);
    } else if (original_ids.size() != n) {
        throw GraphError("original id vector size does not match vertex count");
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!labels[i].consistent())
            throw GraphError("inconsistent group label on vertex " + std::to_string(i));

    std::vector<std::uint64_t> packed;
    packed.reserve(edges.size());
    for (auto [u, v] : edges) {
        if (u >= n || v >= n)
            throw GraphError("edge endpoint out of range: (" + std::to_string(u) + ", " +
                             std::to_string(v) + ")");
        if (u == v)
            throw GraphError("self-loop on vertex " + std::to_string(original_ids[u]));
        packed.push_back(pack(u, v));
    }
    std::sort(packed.begin(), packed.end());
    auto dup = std::adjacent_find(packed.begin(), packed.end());
    if (dup != packed.end()) {
        VertexId u = static_cast<VertexId>(*dup >> 32), v = static_cast<VertexId>(*dup);
        throw GraphError("duplicate edge (" + std::to_string(original_ids[u]) + ", " +
                         std::to_string(original_ids[v]) + ")");
    }

    LabeledDigraph g;
    g.labels_ = std::move(labels);
    g.original_ids_ = std::move(original_ids);

    const std::size_t m = packed.size();
    g.fwd_off_.assign(n + 1, 0);
    g.rev_off_.assign(n + 1, 0);
    g.fwd_dst_.resize(m);
    g.rev_src_.resize(m);
    for (auto e : packed) {
        ++g.fwd_off_[(e >> 32) + 1];
        ++g.rev_off_[static_cast<VertexId>(e) + 1];
    }
    for (std::size_t i = 0; i < n; ++i) {
        g.fwd_off_[i + 1] += g.fwd_off_[i];
        g.rev_off_[i + 1] += g.rev_off_[i];
    }
    // packed is sorted by (src, dst): forward lists come out sorted, and the
    // stable fill below leaves reverse lists sorted by source as well.
    std::vector<std::uint64_t> fcur(g.fwd_off_.begin(), g.fwd_off_.end() - 1);
    std::vector<std::uint64_t> rcur(g.rev_off_.begin(), g.rev_off_.end() - 1);
    for (auto e : packed) {
        VertexId u = static_cast<VertexId>(e >> 32), v = static_cast<VertexId>(e);
        g.fwd_dst_[fcur[u]++] = v;
        g.rev_src_[rcur[v]++] = u;
    }
    g.build_indices();
    return g;
}

void LabeledDigraph::build_indices() {
    const std::size_t n = labels_.size();
    for (int t = 1; t <= 2; ++t) {
        TierIndex& idx = tiers_[t - 1];
        idx.codes.clear();
        for (std::size_t v = 0; v < n; ++v) idx.codes.push_back(labels_[v].code(t));
        std::sort(idx.codes.begin(), idx.codes.end());
        idx.codes.erase(std::unique(idx.codes.begin(), idx.codes.end()), idx.codes.end());

        std::vector<std::uint16_t>& pos = (t == 1) ? pos1_ : pos2_;
        pos.resize(n);
        idx.offsets.assign(idx.codes.size() + 1, 0);
        for (std::size_t v = 0; v < n; ++v) {
            auto it = std::lower_bound(idx.codes.begin(), idx.codes.end(), labels_[v].code(t));
            pos[v] = static_cast<std::uint16_t>(it - idx.codes.begin());
            ++idx.offsets[pos[v] + 1];
        }
        for (std::size_t i = 0; i < idx.codes.size(); ++i) idx.offsets[i + 1] += idx.offsets[i];
        idx.vertices.resize(n);
        std::vector<std::uint64_t> cur(idx.offsets.begin(), idx.offsets.end() - 1);
        for (std::size_t v = 0; v < n; ++v)
            idx.vertices[cur[pos[v]]++] = static_cast<VertexId>(v);
    }
}

const LabeledDigraph::TierIndex& LabeledDigraph::tier_index(int tier) const {
    if (tier != 1 && tier != 2) throw GraphError("tier must be 1 or 2");
    return tiers_[tier - 1];
}

const std::vector<std::uint16_t>& LabeledDigraph::group_codes(int tier) const {
    return tier_index(tier).codes;
}

bool LabeledDigraph::has_group(int tier, std::uint16_t code) const {
    const auto& codes = tier_index(tier).codes;
    return std::binary_search(codes.begin(), codes.end(), code);
}

std::size_t LabeledDigraph::group_position(int tier, std::uint16_t code) const {
    const auto& codes = tier_index(tier).codes;
    auto it = std::lower_bound(codes.begin(), codes.end(), code);
    if (it == codes.end() || *it != code)
        throw GraphError("unknown tier-" + std::to_string(tier) + " group code " +
                         std::to_string(code));
    return static_cast<std::size_t>(it - codes.begin());
}

std::span<const VertexId> LabeledDigraph::vertices_in(int tier, std::uint16_t code) const {
    const TierIndex& idx = tier_index(tier);
    std::size_t p = group_position(tier, code);
    return {idx.vertices.data() + idx.offsets[p], idx.vertices.data() + idx.offsets[p + 1]};
}

GraphBuilder::GraphBuilder(EdgePolicy policy, bool include_isolated)
    : policy_(policy), include_isolated_(include_isolated) {}

void GraphBuilder::set_label(std::int64_t original_id, GroupLabel label) {
    if (!label.consistent())
        throw GraphError("inconsistent group label for id " + std::to_string(original_id));
    labels_by_id_[original_id] = label;
}

bool GraphBuilder::has_label(std::int64_t original_id) const {
    return labels_by_id_.count(original_id) != 0;
}

void GraphBuilder::add_edge(std::int64_t src, std::int64_t dst) {
    if (src == dst) {
        if (policy_ == EdgePolicy::Strict)
            throw GraphError("self-loop edge on id " + std::to_string(src));
        ++counts_.dropped_self_loops;
        return;
    }
    if (!has_label(src) || !has_label(dst)) {
        if (policy_ == EdgePolicy::Strict)
            throw GraphError("edge endpoint without label: " +
                             std::to_string(!has_label(src) ? src : dst));
        ++counts_.dropped_unlabeled;
        return;
    }
    edges_.emplace_back(src, dst);
}

LabeledDigraph GraphBuilder::build() {
    // Dense ids follow ascending original id, which keeps construction
    // deterministic for identical inputs.
    std::vector<std::int64_t> ids;
    if (include_isolated_) {
        ids.reserve(labels_by_id_.size());
        for (const auto& [id, lab] : labels_by_id_) ids.push_back(id);
    } else {
        ids.reserve(edges_.size() * 2);
        for (const auto& [s, d] : edges_) {
            ids.push_back(s);
            ids.push_back(d);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }

    auto dense = [&ids](std::int64_t id) {
        return static_cast<VertexId>(
            std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
    };

    std::vector<std::uint64_t> packed;
    packed.reserve(edges_.size());
    for (const auto& [s, d] : edges_) packed.push_back(pack(dense(s), dense(d)));
    edges_.clear();
    edges_.shrink_to_fit();

    std::sort(packed.begin(), packed.end());
    if (policy_ == EdgePolicy::Strict) {
        auto dup = std::adjacent_find(packed.begin(), packed.end());
        if (dup != packed.end())
            throw GraphError("duplicate edge (" +
                             std::to_string(ids[static_cast<VertexId>(*dup >> 32)]) + ", " +
                             std::to_string(ids[static_cast<VertexId>(*dup)]) + ")");
    } else {
        auto last = std::unique(packed.begin(), packed.end());
        counts_.dropped_duplicates += static_cast<std::uint64_t>(packed.end() - last);
        packed.erase(last, packed.end());
    }

    std::vector<GroupLabel> labels(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) labels[i] = labels_by_id_.at(ids[i]);

    std::vector<std::pair<VertexId, VertexId>> dense_edges;
    dense_edges.reserve(packed.size());
    for (auto e : packed)
        dense_edges.emplace_back(static_cast<VertexId>(e >> 32), static_cast<VertexId>(e));

    const std::size_t n = ids.size();
    return LabeledDigraph::from_edges(n, std::move(labels), dense_edges, std::move(ids));
}

LabeledDigraph build_graph(const std::vector<std::pair<std::int64_t, std::int64_t>>& edges,
                           const std::map<std::int64_t, GroupLabel>& labels) {
    GraphBuilder b(EdgePolicy::Strict, /*include_isolated=*/true);
    for (const auto& [id, lab] : labels) b.set_label(id, lab);
    for (const auto& [s, d] : edges) b.add_edge(s, d);
    return b.build();
}

EdgeMatrix edge_matrix(const LabeledDigraph& graph, int tier) {
    EdgeMatrix m(tier, graph.group_codes(tier));
    const std::size_t g = m.group_count();
    std::vector<std::uint64_t> counts(g * g, 0);
    graph.for_each_edge([&](VertexId u, VertexId v) {
        counts[graph.vertex_group_position(tier, u) * g + graph.vertex_group_position(tier, v)]++;
    });
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = 0; j < g; ++j) m.cell(i, j) = counts[i * g + j];
    return m;
}

EdgeMatrix aggregate_to_tier1(const EdgeMatrix& t2) {
    if (t2.tier() != 2) throw GraphError("aggregate_to_tier1 expects a tier-2 matrix");
    std::vector<std::uint16_t> cats;
    for (auto c : t2.codes()) cats.push_back(static_cast<std::uint16_t>(c / 10));
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());

    EdgeMatrix t1(1, cats);
    for (std::size_t i = 0; i < t2.group_count(); ++i)
        for (std::size_t j = 0; j < t2.group_count(); ++j)
            t1.cell(t1.index_of(static_cast<std::uint16_t>(t2.codes()[i] / 10)),
                    t1.index_of(static_cast<std::uint16_t>(t2.codes()[j] / 10))) +=
                t2.cell(i, j);
    return t1;
}

}  // namespace localdeg
