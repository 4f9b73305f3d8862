#include "localdeg/correlate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace localdeg {

namespace {

template <class T>
std::optional<double> pearson_impl(const std::vector<T>& x, const std::vector<T>& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("pearson: vector lengths differ (" +
                                    std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()) + ")");
    if (x.size() < 2)
        throw std::invalid_argument("pearson: need at least 2 entries, got " +
                                    std::to_string(x.size()));

    // running means with co-moment updates; stable at half-million entries
    double mx = 0, my = 0, cxx = 0, cyy = 0, cxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = static_cast<double>(x[i]);
        const double yi = static_cast<double>(y[i]);
        const double dx = xi - mx;
        const double dy = yi - my;
        const double k = 1.0 / static_cast<double>(i + 1);
        mx += dx * k;
        my += dy * k;
        cxx += dx * (xi - mx);
        cyy += dy * (yi - my);
        cxy += dx * (yi - my);
    }
    if (cxx <= 0.0 || cyy <= 0.0) return std::nullopt;
    return std::clamp(cxy / std::sqrt(cxx * cyy), -1.0, 1.0);
}

}  // namespace

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson_impl(x, y);
}

std::optional<double> pearson(const std::vector<std::uint32_t>& x,
                              const std::vector<std::uint32_t>& y) {
    return pearson_impl(x, y);
}

std::array<CorrelationReport, 3> correlation_suite(const DegreeDecomposition& d) {
    auto make = [&](const char* la, const std::vector<std::uint32_t>& a, const char* lb,
                    const std::vector<std::uint32_t>& b) {
        CorrelationReport r;
        r.label_a = la;
        r.label_b = lb;
        r.n = a.size();
        r.pcc = pearson(a, b);
        return r;
    };
    return {make("global", d.global_in, "internal", d.internal_in),
            make("global", d.global_in, "external", d.external_in),
            make("internal", d.internal_in, "external", d.external_in)};
}

CorrelationReport pairwise_channel_correlation(const LabeledDigraph& graph, GroupRef dest,
                                               GroupRef source_a, GroupRef source_b,
                                               std::optional<std::uint16_t> scope_category,
                                               bool require_inlink) {
    const ChannelVector a = channel_indegree(graph, dest, source_a, scope_category);
    const ChannelVector b = channel_indegree(graph, dest, source_b, scope_category);

    std::vector<std::uint32_t> va, vb;
    va.reserve(a.counts.size());
    vb.reserve(b.counts.size());
    for (std::size_t i = 0; i < a.counts.size(); ++i) {
        if (require_inlink && a.counts[i] == 0 && b.counts[i] == 0) continue;
        va.push_back(a.counts[i]);
        vb.push_back(b.counts[i]);
    }

    CorrelationReport r;
    r.label_a = "channel(" + std::to_string(source_a.code) + ")";
    r.label_b = "channel(" + std::to_string(source_b.code) + ")";
    r.n = va.size();
    r.pcc = pearson(va, vb);
    return r;
}

void to_json(nlohmann::json& j, const CorrelationReport& r) {
    j = nlohmann::json{{"pair", r.label_a + "-" + r.label_b}, {"n", r.n}};
    if (r.pcc)
        j["pcc"] = *r.pcc;
    else
        j["pcc"] = nullptr;
}

}  // namespace localdeg
