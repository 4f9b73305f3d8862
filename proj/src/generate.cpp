#include "localdeg/generate.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <unordered_set>

namespace localdeg {

namespace {

double u01(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

std::string cell_name(std::uint16_t src, std::uint16_t dst) {
    return "(" + std::to_string(src) + "," + std::to_string(dst) + ")";
}

}  // namespace

// ---------------------------------------------------------- ChannelAttachment

ChannelAttachment::ChannelAttachment(std::uint32_t capacity, double smoothing)
    : tree_(static_cast<std::size_t>(capacity) + 1, 0.0),
      capacity_(capacity),
      smoothing_(smoothing) {}

void ChannelAttachment::add(std::uint32_t slot, double delta) {
    for (std::uint32_t i = slot + 1; i <= capacity_; i += i & (~i + 1)) tree_[i] += delta;
}

double ChannelAttachment::prefix(std::uint32_t count) const {
    double s = 0;
    for (std::uint32_t i = count; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
}

void ChannelAttachment::vertex_arrived() {
    if (filled_ >= capacity_)
        throw GenerateError("attachment channel over capacity: " + std::to_string(capacity_));
    add(filled_, smoothing_);
    ++filled_;
}

void ChannelAttachment::edge_added(std::uint32_t slot) {
    if (slot >= filled_)
        throw GenerateError("attachment edge to a slot that has not arrived: " +
                            std::to_string(slot));
    add(slot, 1.0);
}

double ChannelAttachment::total_weight() const { return prefix(filled_); }

double ChannelAttachment::weight_of(std::uint32_t slot) const {
    return prefix(slot + 1) - prefix(slot);
}

std::uint32_t ChannelAttachment::sample(double u) const {
    std::uint32_t pos = 0;
    std::uint32_t step = 1;
    while ((step << 1) <= capacity_) step <<= 1;
    for (; step > 0; step >>= 1) {
        const std::uint32_t next = pos + step;
        if (next <= capacity_ && tree_[next] < u) {
            pos = next;
            u -= tree_[next];
        }
    }
    // pos is the count of slots whose cumulative weight lies below u
    return std::min(pos, filled_ == 0 ? 0 : filled_ - 1);
}

// -------------------------------------------------------------------- config

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    try {
        for (const auto& g : j.at("groups")) {
            GroupSpec spec;
            spec.label = GroupLabel::from_subcategory(g.at("subcategory").get<int>());
            spec.size = g.at("size").get<std::uint32_t>();
            c.groups.push_back(spec);
        }
        const auto& t = j.at("target");
        std::vector<std::uint16_t> codes = t.at("codes").get<std::vector<std::uint16_t>>();
        if (!std::is_sorted(codes.begin(), codes.end()))
            throw GenerateError("target codes must be ascending");
        EdgeMatrix m(2, codes);
        const auto& rows = t.at("rows");
        if (rows.size() != codes.size())
            throw GenerateError("target needs one row per code");
        for (std::size_t r = 0; r < codes.size(); ++r) {
            if (rows[r].size() != codes.size())
                throw GenerateError("target row " + std::to_string(r) + " has wrong width");
            for (std::size_t col = 0; col < codes.size(); ++col)
                m.cell(r, col) = rows[r][col].get<std::uint64_t>();
        }
        c.target = std::move(m);
        c.smoothing = j.value("smoothing", 1.0);
        c.seed = j.value("seed", std::uint64_t{1});
        const std::string arrival = j.value("arrival", std::string("quota_proportional"));
        if (arrival == "quota_proportional")
            c.arrival = Arrival::QuotaProportional;
        else if (arrival == "round_robin")
            c.arrival = Arrival::RoundRobin;
        else
            throw GenerateError("unknown arrival policy: " + arrival);
    } catch (const nlohmann::json::exception& e) {
        throw GenerateError(std::string("bad generator config: ") + e.what());
    }
    return c;
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
    j = nlohmann::json::object();
    j["groups"] = nlohmann::json::array();
    for (const auto& g : c.groups)
        j["groups"].push_back({{"subcategory", g.label.tier2}, {"size", g.size}});
    nlohmann::json t;
    t["codes"] = c.target.codes();
    t["rows"] = nlohmann::json::array();
    for (std::size_t r = 0; r < c.target.group_count(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t col = 0; col < c.target.group_count(); ++col)
            row.push_back(c.target.cell(r, col));
        t["rows"].push_back(std::move(row));
    }
    j["target"] = std::move(t);
    j["smoothing"] = c.smoothing;
    j["seed"] = c.seed;
    j["arrival"] = c.arrival == GeneratorConfig::Arrival::QuotaProportional
                       ? "quota_proportional"
                       : "round_robin";
}

// ------------------------------------------------------------------ generate

LabeledDigraph generate(const GeneratorConfig& config) {
    if (!(config.smoothing > 0))
        throw GenerateError("smoothing must be positive, got " +
                            std::to_string(config.smoothing));

    // groups sorted by subcategory code; must match the matrix axes exactly
    std::vector<GroupSpec> groups = config.groups;
    std::sort(groups.begin(), groups.end(),
              [](const GroupSpec& a, const GroupSpec& b) { return a.label.tier2 < b.label.tier2; });
    std::vector<std::uint16_t> codes;
    for (const auto& g : groups) {
        if (!g.label.consistent())
            throw GenerateError("group label " + std::to_string(g.label.tier2) +
                                " is not a valid subcategory code");
        if (!codes.empty() && codes.back() == g.label.tier2)
            throw GenerateError("duplicate group " + std::to_string(g.label.tier2));
        codes.push_back(g.label.tier2);
    }
    if (config.target.tier() != 2)
        throw GenerateError("target matrix must be tier-2");
    if (config.target.codes() != codes)
        throw GenerateError("target matrix codes do not match the configured groups");

    const std::size_t gcount = groups.size();
    std::uint64_t total_vertices = 0;
    for (const auto& g : groups) total_vertices += g.size;

    // structural capacity check: a cell can never exceed what distinct earlier
    // arrivals could absorb under ANY interleaving
    for (std::size_t s = 0; s < gcount; ++s) {
        for (std::size_t d = 0; d < gcount; ++d) {
            const std::uint64_t demand = config.target.cell(s, d);
            const std::uint64_t ns = groups[s].size, nd = groups[d].size;
            const std::uint64_t cap =
                (s == d) ? (ns == 0 ? 0 : ns * (ns - 1) / 2) : ns * nd;
            if (demand > cap)
                throw GenerateError("infeasible target: cell " +
                                    cell_name(codes[s], codes[d]) + " demands " +
                                    std::to_string(demand) + " edges but at most " +
                                    std::to_string(cap) + " are achievable");
        }
    }

    std::mt19937_64 rng(config.seed);

    // split each cell's demand across the source group's arrivals: an even
    // base plus one extra edge on a random subset (Floyd's sampling), so the
    // totals come out exact by construction
    std::vector<std::uint64_t> base(gcount * gcount, 0);
    std::vector<std::vector<std::uint8_t>> extra(gcount * gcount);
    for (std::size_t s = 0; s < gcount; ++s) {
        for (std::size_t d = 0; d < gcount; ++d) {
            const std::uint64_t demand = config.target.cell(s, d);
            const std::uint64_t ns = groups[s].size;
            if (demand == 0 || ns == 0) continue;
            base[s * gcount + d] = demand / ns;
            const std::uint64_t rem = demand % ns;
            if (rem == 0) continue;
            auto& flags = extra[s * gcount + d];
            flags.assign(ns, 0);
            for (std::uint64_t j = ns - rem; j < ns; ++j) {
                const std::uint64_t t = rng() % (j + 1);
                if (flags[t])
                    flags[j] = 1;
                else
                    flags[t] = 1;
            }
        }
    }

    // one attachment counter per ordered channel
    std::vector<ChannelAttachment> trees;
    trees.reserve(gcount * gcount);
    for (std::size_t s = 0; s < gcount; ++s)
        for (std::size_t d = 0; d < gcount; ++d)
            trees.emplace_back(groups[d].size, config.smoothing);

    std::vector<std::uint64_t> deficit(gcount * gcount, 0);
    std::vector<std::uint32_t> filled(gcount, 0), remaining(gcount);
    for (std::size_t i = 0; i < gcount; ++i) remaining[i] = groups[i].size;
    std::vector<std::vector<VertexId>> members(gcount);
    for (std::size_t i = 0; i < gcount; ++i) members[i].reserve(groups[i].size);

    std::vector<std::pair<VertexId, VertexId>> edges;
    edges.reserve(static_cast<std::size_t>(config.target.total()));
    std::vector<GroupLabel> vertex_labels;
    vertex_labels.reserve(total_vertices);

    std::uint64_t left = total_vertices;
    std::size_t rr_cursor = 0;
    std::unordered_set<std::uint32_t> used;

    for (VertexId vid = 0; left > 0; ++vid, --left) {
        // next arrival's group
        std::size_t g = 0;
        if (config.arrival == GeneratorConfig::Arrival::QuotaProportional) {
            std::uint64_t r = rng() % left;
            while (r >= remaining[g]) r -= remaining[g++];
        } else {
            while (remaining[rr_cursor] == 0) rr_cursor = (rr_cursor + 1) % gcount;
            g = rr_cursor;
            rr_cursor = (rr_cursor + 1) % gcount;
        }
        const std::uint32_t j = filled[g];  // within-group arrival index

        for (std::size_t d = 0; d < gcount; ++d) {
            const std::size_t ch = g * gcount + d;
            std::uint64_t want = base[ch] + deficit[ch];
            if (!extra[ch].empty() && extra[ch][j]) ++want;
            if (want == 0) continue;

            ChannelAttachment& tree = trees[ch];
            const std::uint32_t avail = filled[d];  // arriving vertex not yet visible
            const std::uint64_t place = std::min<std::uint64_t>(want, avail);
            deficit[ch] = want - place;
            if (place == 0) continue;

            used.clear();
            for (std::uint64_t e = 0; e < place; ++e) {
                std::uint32_t slot = 0;
                bool found = false;
                for (int attempt = 0; attempt < 100; ++attempt) {
                    slot = tree.sample(u01(rng) * tree.total_weight());
                    if (!used.count(slot)) {
                        found = true;
                        break;
                    }
                }
                if (!found) {
                    // dense corner: sample exactly among the unused slots
                    double free_weight = 0;
                    for (std::uint32_t s2 = 0; s2 < avail; ++s2)
                        if (!used.count(s2)) free_weight += tree.weight_of(s2);
                    double pick = u01(rng) * free_weight;
                    for (std::uint32_t s2 = 0; s2 < avail; ++s2) {
                        if (used.count(s2)) continue;
                        pick -= tree.weight_of(s2);
                        slot = s2;
                        if (pick <= 0) break;
                    }
                }
                used.insert(slot);
                tree.edge_added(slot);
                edges.emplace_back(vid, members[d][slot]);
            }
        }

        // only now does the new vertex become a valid target
        for (std::size_t s = 0; s < gcount; ++s) trees[s * gcount + g].vertex_arrived();
        members[g].push_back(vid);
        vertex_labels.push_back(groups[g].label);
        ++filled[g];
        --remaining[g];
    }

    for (std::size_t s = 0; s < gcount; ++s) {
        for (std::size_t d = 0; d < gcount; ++d) {
            if (deficit[s * gcount + d] > 0)
                throw GenerateError(
                    "could not place " + std::to_string(deficit[s * gcount + d]) + " of " +
                    std::to_string(config.target.cell(s, d)) + " edges for cell " +
                    cell_name(codes[s], codes[d]) +
                    ": the arrival order ran out of distinct targets");
        }
    }

    return LabeledDigraph::from_edges(total_vertices, std::move(vertex_labels), edges);
}

void write_graph_csv(const LabeledDigraph& graph, const std::string& citations_path,
                     const std::string& labels_path) {
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw GenerateError("cannot open " + labels_path + " for writing");
    lab << "PATENT,CAT,SUBCAT\n";
    for (VertexId v = 0; v < graph.vertex_count(); ++v) {
        const GroupLabel& l = graph.label(v);
        lab << graph.original_id(v) << ',' << l.tier1 << ',' << l.tier2 << '\n';
    }

    std::ofstream cit(citations_path, std::ios::binary);
    if (!cit) throw GenerateError("cannot open " + citations_path + " for writing");
    cit << "CITING,CITED\n";
    graph.for_each_edge([&](VertexId u, VertexId v) {
        cit << graph.original_id(u) << ',' << graph.original_id(v) << '\n';
    });
}

}  // namespace localdeg
