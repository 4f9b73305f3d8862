#include "localdeg/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

#include "localdeg/decompose.hpp"

namespace localdeg {

namespace {

constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ULL;

std::uint64_t fnv1a64(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_u64(std::uint64_t h, std::uint64_t v) { return fnv1a64(h, &v, sizeof v); }

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Shortest round-trip decimal form, same as the JSON output, so the CSV and
// JSON views of a run never disagree in the last digit.
std::string num(double v) { return nlohmann::json(v).dump(); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string join_families(const std::vector<Family>& fams) {
    std::string out;
    for (Family f : fams) {
        if (!out.empty()) out += '+';
        out += family_name(f);
    }
    return out;
}

const char* fit_error_tag(FitError::Kind k) {
    switch (k) {
        case FitError::Kind::TooFewSamples: return "too_few_samples";
        case FitError::Kind::Degenerate: return "degenerate_sample";
        case FitError::Kind::NonConvergence: return "non_convergence";
        case FitError::Kind::AllFitsFailed: return "all_fits_failed";
    }
    return "fit_error";
}

FitCell make_fit_cell(std::string subject, const std::vector<std::uint32_t>& samples,
                      const ReportOptions& o) {
    FitCell cell;
    cell.subject = std::move(subject);
    try {
        cell.fits = select_best(samples, o.threshold, o.fit);
    } catch (const FitError& e) {
        cell.error = std::string(fit_error_tag(e.kind())) + ": " + e.what();
    } catch (const std::exception& e) {
        cell.error = std::string("internal_error: ") + e.what();
    }
    return cell;
}

PccCell make_pcc_cell(const CorrelationReport& r) {
    return PccCell{r.label_a + "-" + r.label_b, r.pcc, r.n, ""};
}

// Runs fn(0..n-1) across a small pool. Each index owns its output slot, so
// the result is identical no matter how the indices land on threads.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    unsigned want = threads ? threads : std::thread::hardware_concurrency();
    if (want == 0) want = 1;
    if (static_cast<std::size_t>(want) > n) want = static_cast<unsigned>(n);
    if (want <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(want);
    for (unsigned t = 0; t < want; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
        });
    for (auto& th : pool) th.join();
}

DegreeDecomposition slice_decomposition(const DegreeDecomposition& full,
                                        std::span<const VertexId> members) {
    DegreeDecomposition out;
    out.tier = full.tier;
    out.scope_category = full.scope_category;
    out.vertices.reserve(members.size());
    std::size_t i = 0;
    for (VertexId v : members) {
        while (i < full.vertices.size() && full.vertices[i] < v) ++i;
        if (i == full.vertices.size()) break;
        if (full.vertices[i] != v) continue;
        out.vertices.push_back(v);
        out.global_in.push_back(full.global_in[i]);
        out.internal_in.push_back(full.internal_in[i]);
        out.external_in.push_back(full.external_in[i]);
    }
    return out;
}

struct FitTask {
    FitCell* cell;
    std::string subject;
    const std::vector<std::uint32_t>* samples;
};

TierReport run_tier(const LabeledDigraph& graph, int tier, std::optional<std::uint16_t> scope,
                    const ReportOptions& o) {
    TierReport rep;
    rep.tier = tier;
    rep.scope_category = scope;

    std::vector<std::uint16_t> codes;
    for (std::uint16_t c : graph.group_codes(tier))
        if (!scope || c / 10 == *scope) codes.push_back(c);
    if (codes.empty()) {
        std::string what = "no tier-" + std::to_string(tier) + " groups";
        if (scope) what += " inside category " + std::to_string(*scope);
        throw std::invalid_argument(what);
    }

    const DegreeDecomposition full = decompose_indegree(graph, tier, scope);

    struct GroupPrep {
        DegreeDecomposition slice;
        std::vector<ChannelVector> channels;
    };
    const std::size_t n_groups = codes.size();
    rep.groups.resize(n_groups);
    std::vector<GroupPrep> prep(n_groups);

    for (std::size_t i = 0; i < n_groups; ++i) {
        GroupReport& g = rep.groups[i];
        g.group = GroupRef{tier, codes[i]};
        auto members = graph.vertices_in(tier, codes[i]);
        g.vertex_count = members.size();
        prep[i].slice = slice_decomposition(full, members);
        g.externally_popular = externally_popular_fraction(prep[i].slice);
        for (std::uint16_t src : codes)
            if (src != codes[i])
                prep[i].channels.push_back(
                    channel_indegree(graph, g.group, GroupRef{tier, src}, scope));
        g.channel_fits.resize(prep[i].channels.size());
    }

    std::vector<FitTask> tasks;
    for (std::size_t i = 0; i < n_groups; ++i) {
        GroupReport& g = rep.groups[i];
        tasks.push_back({&g.global_fit, "global", &prep[i].slice.global_in});
        tasks.push_back({&g.internal_fit, "internal", &prep[i].slice.internal_in});
        tasks.push_back({&g.external_fit, "external", &prep[i].slice.external_in});
        for (std::size_t j = 0; j < prep[i].channels.size(); ++j)
            tasks.push_back({&g.channel_fits[j],
                             "channel(" + std::to_string(prep[i].channels[j].source.code) + ")",
                             &prep[i].channels[j].counts});
    }
    parallel_for(tasks.size(), o.threads, [&](std::size_t k) {
        *tasks[k].cell = make_fit_cell(tasks[k].subject, *tasks[k].samples, o);
    });

    for (std::size_t i = 0; i < n_groups; ++i) {
        GroupReport& g = rep.groups[i];
        std::set<Family> seen;
        for (const FitCell& c : g.channel_fits)
            if (c.ok())
                for (Family f : c.fits->best) seen.insert(f);
        g.external_union.assign(seen.begin(), seen.end());

        try {
            auto suite = correlation_suite(prep[i].slice);
            for (std::size_t k = 0; k < 3; ++k) g.decomposition_pcc[k] = make_pcc_cell(suite[k]);
        } catch (const std::invalid_argument& e) {
            static const char* names[3] = {"global-internal", "global-external",
                                           "internal-external"};
            for (std::size_t k = 0; k < 3; ++k)
                g.decomposition_pcc[k] = PccCell{names[k], std::nullopt,
                                                 prep[i].slice.vertices.size(),
                                                 std::string("invalid_argument: ") + e.what()};
        }
    }

    for (std::size_t i = 0; i < n_groups; ++i)
        for (std::size_t a = 0; a < n_groups; ++a) {
            if (a == i) continue;
            for (std::size_t b = a + 1; b < n_groups; ++b) {
                if (b == i) continue;
                PairPccRow row;
                row.dest = GroupRef{tier, codes[i]};
                row.source_a = GroupRef{tier, codes[a]};
                row.source_b = GroupRef{tier, codes[b]};
                try {
                    row.cell = make_pcc_cell(pairwise_channel_correlation(
                        graph, row.dest, row.source_a, row.source_b, scope));
                } catch (const std::invalid_argument& e) {
                    row.cell = PccCell{to_string(row.source_a) + "-" + to_string(row.source_b),
                                       std::nullopt, 0,
                                       std::string("invalid_argument: ") + e.what()};
                }
                rep.channel_pairs.push_back(std::move(row));
            }
        }

    return rep;
}

std::string best_or_error(const FitCell& c) {
    return c.ok() ? join_families(c.fits->best) : c.error;
}

}  // namespace

TierReport run_tier1(const LabeledDigraph& graph, const ReportOptions& options) {
    return run_tier(graph, 1, std::nullopt, options);
}

TierReport run_tier2(const LabeledDigraph& graph, std::uint16_t category,
                     const ReportOptions& options) {
    return run_tier(graph, 2, category, options);
}

CrossTierReport run_cross_tier(const LabeledDigraph& graph,
                               const std::vector<CrossFitQuery>& fit_queries,
                               const std::vector<CrossPccQuery>& pcc_queries,
                               const ReportOptions& options) {
    CrossTierReport rep;
    rep.fits.resize(fit_queries.size());

    std::vector<std::vector<std::uint32_t>> samples(fit_queries.size());
    std::vector<std::size_t> runnable;
    for (std::size_t i = 0; i < fit_queries.size(); ++i) {
        const CrossFitQuery& q = fit_queries[i];
        rep.fits[i].query = q;
        const GroupRef dest{1, q.dest_category};
        const GroupRef src{2, q.source_subcategory};
        FitCell& cell = rep.fits[i].cell;
        cell.subject = to_string(dest) + "<-" + to_string(src);
        if (!graph.has_group(1, q.dest_category)) {
            cell.error = "unknown_group: " + to_string(dest) + " not present in graph";
            continue;
        }
        if (!graph.has_group(2, q.source_subcategory)) {
            cell.error = "unknown_group: " + to_string(src) + " not present in graph";
            continue;
        }
        samples[i] = std::move(channel_indegree(graph, dest, src).counts);
        runnable.push_back(i);
    }
    parallel_for(runnable.size(), options.threads, [&](std::size_t k) {
        const std::size_t i = runnable[k];
        rep.fits[i].cell =
            make_fit_cell(std::move(rep.fits[i].cell.subject), samples[i], options);
    });

    for (const CrossPccQuery& q : pcc_queries) {
        CrossPccRow row;
        row.query = q;
        const GroupRef dest{1, q.dest_category};
        const GroupRef a{2, q.subcat_a};
        const GroupRef b{2, q.subcat_b};
        row.cell.label = to_string(a) + "-" + to_string(b);
        std::string missing;
        if (!graph.has_group(1, q.dest_category)) missing = to_string(dest);
        else if (!graph.has_group(2, q.subcat_a)) missing = to_string(a);
        else if (!graph.has_group(2, q.subcat_b)) missing = to_string(b);
        if (!missing.empty()) {
            row.cell.error = "unknown_group: " + missing + " not present in graph";
        } else {
            try {
                row.cell = make_pcc_cell(pairwise_channel_correlation(graph, dest, a, b));
            } catch (const std::invalid_argument& e) {
                row.cell.error = std::string("invalid_argument: ") + e.what();
            }
        }
        rep.pccs.push_back(std::move(row));
    }
    return rep;
}

CcdfTable emit_ccdf(const std::vector<std::uint32_t>& samples,
                    const std::vector<FitResult>& fits) {
    CcdfTable t;
    for (auto [x, p] : ccdf_points(samples)) {
        t.x.push_back(x);
        t.empirical.push_back(p);
    }
    for (const FitResult& f : fits) {
        std::string name = family_name(f.family);
        for (int k = 2; std::find(t.fit_names.begin(), t.fit_names.end(), name) !=
                        t.fit_names.end();
             ++k)
            name = std::string(family_name(f.family)) + "#" + std::to_string(k);

        // The fit describes the tail x >= xmin only; anchor it to the
        // empirical mass there so both columns plot on the same axis.
        double scale = 0.0;
        for (std::size_t i = 0; i < t.x.size(); ++i)
            if (t.x[i] >= f.xmin) {
                scale = t.empirical[i];
                break;
            }
        std::vector<double> col(t.x.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < t.x.size(); ++i)
            if (t.x[i] >= f.xmin) col[i] = scale * f.ccdf(t.x[i]);
        t.fit_names.push_back(std::move(name));
        t.fitted.push_back(std::move(col));
    }
    return t;
}

std::string to_csv(const CcdfTable& t) {
    std::string out = "x,ccdf";
    for (const std::string& n : t.fit_names) out += "," + csv_field(n);
    out += '\n';
    for (std::size_t i = 0; i < t.x.size(); ++i) {
        out += std::to_string(t.x[i]);
        out += ',';
        out += num(t.empirical[i]);
        for (const auto& col : t.fitted) {
            out += ',';
            if (!std::isnan(col[i])) out += num(col[i]);
        }
        out += '\n';
    }
    return out;
}

nlohmann::json graph_fingerprint(const LabeledDigraph& graph) {
    std::uint64_t eh = kFnvBasis;
    graph.for_each_edge([&](VertexId u, VertexId v) {
        eh = fnv1a64_u64(eh, static_cast<std::uint64_t>(graph.original_id(u)));
        eh = fnv1a64_u64(eh, static_cast<std::uint64_t>(graph.original_id(v)));
    });
    std::uint64_t lh = kFnvBasis;
    for (VertexId v = 0; v < graph.vertex_count(); ++v) {
        lh = fnv1a64_u64(lh, static_cast<std::uint64_t>(graph.original_id(v)));
        const GroupLabel& l = graph.label(v);
        lh = fnv1a64_u64(lh, static_cast<std::uint64_t>(l.tier1) << 16 |
                                 static_cast<std::uint64_t>(l.tier2));
    }
    return nlohmann::json{{"vertex_count", graph.vertex_count()},
                          {"edge_count", graph.edge_count()},
                          {"edge_hash", hex64(eh)},
                          {"label_hash", hex64(lh)}};
}

nlohmann::json to_json(const ReportOptions& o) {
    nlohmann::json xmin;
    if (o.fit.xmin.mode == XminPolicy::Mode::Fixed)
        xmin = {{"mode", "fixed"}, {"value", o.fit.xmin.xmin}};
    else
        xmin = {{"mode", "scan_ks"}, {"limit", o.fit.xmin.scan_limit}};
    return nlohmann::json{{"min_tail", o.fit.min_tail}, {"polish", o.fit.polish},
                          {"seed", o.fit.seed},         {"threads", o.threads},
                          {"threshold", o.threshold},   {"xmin", xmin}};
}

void to_json(nlohmann::json& j, const FitCell& c) {
    j = nlohmann::json{{"subject", c.subject}, {"error", c.error}};
    if (c.fits) j["fits"] = *c.fits;
    else j["fits"] = nullptr;
}

void to_json(nlohmann::json& j, const PccCell& c) {
    j = nlohmann::json{{"label", c.label}, {"n", c.n}, {"error", c.error}};
    if (c.pcc) j["pcc"] = *c.pcc;
    else j["pcc"] = nullptr;
}

void to_json(nlohmann::json& j, const GroupReport& g) {
    j = nlohmann::json{{"group", to_string(g.group)},
                       {"vertex_count", g.vertex_count},
                       {"externally_popular", g.externally_popular},
                       {"global_fit", g.global_fit},
                       {"internal_fit", g.internal_fit},
                       {"external_fit", g.external_fit},
                       {"channel_fits", g.channel_fits},
                       {"decomposition_pcc", g.decomposition_pcc}};
    nlohmann::json u = nlohmann::json::array();
    for (Family f : g.external_union) u.push_back(family_name(f));
    j["external_union"] = std::move(u);
}

void to_json(nlohmann::json& j, const PairPccRow& r) {
    j = nlohmann::json{{"dest", to_string(r.dest)},
                       {"source_a", to_string(r.source_a)},
                       {"source_b", to_string(r.source_b)},
                       {"cell", r.cell}};
}

nlohmann::json to_json(const TierReport& r) {
    nlohmann::json j{{"tier", r.tier},
                     {"groups", r.groups},
                     {"channel_pairs", r.channel_pairs}};
    if (r.scope_category) j["scope_category"] = *r.scope_category;
    else j["scope_category"] = nullptr;
    return j;
}

std::map<std::string, std::string> csv_tables(const TierReport& r) {
    std::map<std::string, std::string> tables;

    std::string s = "group,vertex_count,externally_popular,global_best,internal_best,"
                    "external_best,channel_union\n";
    for (const GroupReport& g : r.groups) {
        s += to_string(g.group) + "," + std::to_string(g.vertex_count) + "," +
             num(g.externally_popular) + "," + csv_field(best_or_error(g.global_fit)) + "," +
             csv_field(best_or_error(g.internal_fit)) + "," +
             csv_field(best_or_error(g.external_fit)) + "," +
             join_families(g.external_union) + "\n";
    }
    tables["group_summary"] = std::move(s);

    s = "group,pair,n,pcc,error\n";
    for (const GroupReport& g : r.groups)
        for (const PccCell& c : g.decomposition_pcc)
            s += to_string(g.group) + "," + csv_field(c.label) + "," + std::to_string(c.n) +
                 "," + (c.pcc ? num(*c.pcc) : "") + "," + csv_field(c.error) + "\n";
    tables["group_pcc"] = std::move(s);

    s = "group,source,best,error\n";
    for (const GroupReport& g : r.groups)
        for (const FitCell& c : g.channel_fits)
            s += to_string(g.group) + "," + csv_field(c.subject) + "," +
                 csv_field(c.ok() ? join_families(c.fits->best) : "") + "," +
                 csv_field(c.error) + "\n";
    tables["channel_fits"] = std::move(s);

    s = "dest,source_a,source_b,n,pcc,error\n";
    for (const PairPccRow& row : r.channel_pairs)
        s += to_string(row.dest) + "," + to_string(row.source_a) + "," +
             to_string(row.source_b) + "," + std::to_string(row.cell.n) + "," +
             (row.cell.pcc ? num(*row.cell.pcc) : "") + "," + csv_field(row.cell.error) + "\n";
    tables["channel_pair_pcc"] = std::move(s);

    return tables;
}

nlohmann::json to_json(const CrossTierReport& r) {
    nlohmann::json fits = nlohmann::json::array();
    for (const CrossFitRow& row : r.fits)
        fits.push_back({{"dest_category", row.query.dest_category},
                        {"source_subcategory", row.query.source_subcategory},
                        {"cell", row.cell}});
    nlohmann::json pccs = nlohmann::json::array();
    for (const CrossPccRow& row : r.pccs)
        pccs.push_back({{"dest_category", row.query.dest_category},
                        {"subcat_a", row.query.subcat_a},
                        {"subcat_b", row.query.subcat_b},
                        {"cell", row.cell}});
    return nlohmann::json{{"fits", std::move(fits)}, {"pccs", std::move(pccs)}};
}

std::map<std::string, std::string> csv_tables(const CrossTierReport& r) {
    std::map<std::string, std::string> tables;
    std::string s = "dest_category,source_subcategory,best,error\n";
    for (const CrossFitRow& row : r.fits)
        s += std::to_string(row.query.dest_category) + "," +
             std::to_string(row.query.source_subcategory) + "," +
             csv_field(row.cell.ok() ? join_families(row.cell.fits->best) : "") + "," +
             csv_field(row.cell.error) + "\n";
    tables["cross_fits"] = std::move(s);

    s = "dest_category,subcat_a,subcat_b,n,pcc,error\n";
    for (const CrossPccRow& row : r.pccs)
        s += std::to_string(row.query.dest_category) + "," + std::to_string(row.query.subcat_a) +
             "," + std::to_string(row.query.subcat_b) + "," + std::to_string(row.cell.n) + "," +
             (row.cell.pcc ? num(*row.cell.pcc) : "") + "," + csv_field(row.cell.error) + "\n";
    tables["cross_pcc"] = std::move(s);
    return tables;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

void write_analysis_run(const std::filesystem::path& dir, const AnalysisRun& run) {
    std::filesystem::create_directories(dir);
    nlohmann::json j{{"kind", run.kind},
                     {"toolkit_version", kToolkitVersion},
                     {"dataset", run.dataset},
                     {"configuration", run.configuration},
                     {"outputs", run.outputs}};
    write_file(dir / "run.json", j.dump(2) + "\n");
    for (const auto& [name, body] : run.tables) write_file(dir / (name + ".csv"), body);
    write_file(dir / "timings.json", run.timings.dump(2) + "\n");
}

}  // namespace localdeg
