#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "localdeg/correlate.hpp"
#include "localdeg/distfit.hpp"
#include "localdeg/graph.hpp"

namespace localdeg {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct ReportOptions {
    FitOptions fit;
    double threshold = 0.1;  // significance cutoff passed to select_best
    unsigned threads = 0;    // worker count for the fit sweep; 0 picks the hardware count
};
nlohmann::json to_json(const ReportOptions& o);

// One model-selection slot in a report. Either the fit set is present or
// `error` carries a typed message ("too_few_samples: ..."); never both.
struct FitCell {
    std::string subject;  // "global", "internal", "external", "channel(<code>)"
    std::optional<BestFitSet> fits;
    std::string error;

    bool ok() const { return fits.has_value(); }
};
void to_json(nlohmann::json& j, const FitCell& c);

// One correlation slot. An undefined coefficient (zero variance) is a valid
// outcome and lands in `pcc` as null; `error` is reserved for computations
// that could not run at all.
struct PccCell {
    std::string label;
    std::optional<double> pcc;
    std::size_t n = 0;
    std::string error;
};
void to_json(nlohmann::json& j, const PccCell& c);

// Everything measured about one destination group at the tier under study.
struct GroupReport {
    GroupRef group;
    std::size_t vertex_count = 0;
    double externally_popular = 0.0;  // fraction with at least one external in-link

    FitCell global_fit;
    FitCell internal_fit;
    FitCell external_fit;                // pooled external indegree
    std::vector<FitCell> channel_fits;   // per source group, ascending code
    std::vector<Family> external_union;  // union of the channel best-fit sets

    // global-internal, global-external, internal-external
    std::array<PccCell, 3> decomposition_pcc;
};
void to_json(nlohmann::json& j, const GroupReport& g);

// PCC between two source groups' contributions into one destination group.
struct PairPccRow {
    GroupRef dest;
    GroupRef source_a;
    GroupRef source_b;
    PccCell cell;
};
void to_json(nlohmann::json& j, const PairPccRow& r);

struct TierReport {
    int tier = 1;
    std::optional<std::uint16_t> scope_category;  // set for tier-2 runs
    std::vector<GroupReport> groups;
    std::vector<PairPccRow> channel_pairs;  // every unordered source pair per destination
};
nlohmann::json to_json(const TierReport& r);
std::map<std::string, std::string> csv_tables(const TierReport& r);

TierReport run_tier1(const LabeledDigraph& graph, const ReportOptions& options = {});

// Restricts the graph to one category and analyzes its subcategories; only
// edges with both endpoints inside the category count.
TierReport run_tier2(const LabeledDigraph& graph, std::uint16_t category,
                     const ReportOptions& options = {});

// Cross-tier queries: a whole category on the receiving end, single
// subcategories (possibly from other categories) as sources.
struct CrossFitQuery {
    std::uint16_t dest_category;
    std::uint16_t source_subcategory;
};
struct CrossPccQuery {
    std::uint16_t dest_category;
    std::uint16_t subcat_a;
    std::uint16_t subcat_b;
};
struct CrossFitRow {
    CrossFitQuery query;
    FitCell cell;
};
struct CrossPccRow {
    CrossPccQuery query;
    PccCell cell;
};
struct CrossTierReport {
    std::vector<CrossFitRow> fits;
    std::vector<CrossPccRow> pccs;
};
nlohmann::json to_json(const CrossTierReport& r);
std::map<std::string, std::string> csv_tables(const CrossTierReport& r);

CrossTierReport run_cross_tier(const LabeledDigraph& graph,
                               const std::vector<CrossFitQuery>& fit_queries,
                               const std::vector<CrossPccQuery>& pcc_queries,
                               const ReportOptions& options = {});

// Empirical P(X >= x) over the distinct positive sample values, with one
// overlay column per supplied fit (scaled by the empirical mass at the fit's
// cutoff so the curves are comparable above it; blank below it).
struct CcdfTable {
    std::vector<std::uint32_t> x;
    std::vector<double> empirical;
    std::vector<std::string> fit_names;
    std::vector<std::vector<double>> fitted;  // fitted[k][i] pairs with fit_names[k], x[i]
};
CcdfTable emit_ccdf(const std::vector<std::uint32_t>& samples,
                    const std::vector<FitResult>& fits = {});
std::string to_csv(const CcdfTable& t);

// Identity of a graph for run provenance, independent of how it was loaded.
nlohmann::json graph_fingerprint(const LabeledDigraph& graph);

// A finished analysis plus the provenance needed to reproduce it. Writing
// the same run twice produces byte-identical files except timings.json,
// which is why timings live apart from run.json.
struct AnalysisRun {
    std::string kind;  // "tier1", "tier2", "cross_tier", "fit", "ccdf", ...
    nlohmann::json dataset;
    nlohmann::json configuration;
    nlohmann::json outputs;
    std::map<std::string, std::string> tables;  // basename -> CSV body
    nlohmann::json timings;
};
void write_analysis_run(const std::filesystem::path& dir, const AnalysisRun& run);

}  // namespace localdeg
