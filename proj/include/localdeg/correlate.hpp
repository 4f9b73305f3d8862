#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "localdeg/decompose.hpp"

namespace localdeg {

// One correlation between two named degree vectors. A vector with zero
// variance makes the coefficient undefined; that is reported explicitly
// instead of smuggling in a 0 or a NaN.
struct CorrelationReport {
    std::string label_a;
    std::string label_b;
    std::optional<double> pcc;
    std::size_t n = 0;

    bool defined() const { return pcc.has_value(); }
};
void to_json(nlohmann::json& j, const CorrelationReport& r);

// Product-moment correlation via one-pass running co-moments (Welford-style).
// Throws std::invalid_argument on length mismatch or fewer than two entries;
// returns nullopt when either vector has zero variance.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);
std::optional<double> pearson(const std::vector<std::uint32_t>& x,
                              const std::vector<std::uint32_t>& y);

// The three pairings of a decomposition's degree vectors, in the order
// global-internal, global-external, internal-external.
std::array<CorrelationReport, 3> correlation_suite(const DegreeDecomposition& d);

// Correlation between the indegree contributions of two source groups into
// the same destination group, over the destination's vertices. By default
// every destination vertex counts; require_inlink drops vertices that receive
// nothing from either source (a sensitivity check, not the headline number).
CorrelationReport pairwise_channel_correlation(const LabeledDigraph& graph, GroupRef dest,
                                               GroupRef source_a, GroupRef source_b,
                                               std::optional<std::uint16_t> scope_category = {},
                                               bool require_inlink = false);

}  // namespace localdeg
