#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "localdeg/graph.hpp"

namespace localdeg {

class GenerateError : public std::runtime_error {
public:
    explicit GenerateError(const std::string& what) : std::runtime_error(what) {}
};

// Attachment bookkeeping for one ordered source-group -> destination-group
// channel: each destination slot (arrival order within its group) carries
// weight in-channel-indegree + smoothing, held in a Fenwick tree so weighted
// draws and updates are O(log n). Only this channel's edges ever touch the
// counters; that isolation is what makes the generated local distributions
// independent across sources.
class ChannelAttachment {
public:
    ChannelAttachment(std::uint32_t capacity, double smoothing);

    // the next destination slot becomes eligible, starting at the smoothing weight
    void vertex_arrived();
    // an edge through this channel landed on `slot`
    void edge_added(std::uint32_t slot);

    std::uint32_t active() const { return filled_; }
    double total_weight() const;
    double weight_of(std::uint32_t slot) const;

    // slot whose cumulative weight interval contains u, for u in [0, total)
    std::uint32_t sample(double u) const;

private:
    void add(std::uint32_t slot, double delta);
    double prefix(std::uint32_t count) const;  // sum of slots [0, count)

    std::vector<double> tree_;
    std::uint32_t capacity_ = 0;
    std::uint32_t filled_ = 0;
    double smoothing_ = 1.0;
};

struct GroupSpec {
    GroupLabel label;
    std::uint32_t size = 0;
};

struct GeneratorConfig {
    enum class Arrival { QuotaProportional, RoundRobin };

    std::vector<GroupSpec> groups;  // distinct tier-2 codes, any order
    EdgeMatrix target;              // tier-2 matrix over exactly those codes
    double smoothing = 1.0;         // additive attachment weight, > 0
    std::uint64_t seed = 1;
    Arrival arrival = Arrival::QuotaProportional;

    static GeneratorConfig from_json(const nlohmann::json& j);
};
void to_json(nlohmann::json& j, const GeneratorConfig& c);

// Grows a labeled digraph vertex by vertex. Every cell of the target matrix
// is reproduced exactly; edges always point from a later arrival to an
// earlier one; a fixed seed fixes the output. Infeasible targets (demands
// beyond what distinct earlier arrivals can absorb) raise GenerateError
// naming the offending cell.
LabeledDigraph generate(const GeneratorConfig& config);

// Writes the graph in the citation + label CSV layout the ingest module
// reads, so generated graphs round-trip through the normal pipeline.
void write_graph_csv(const LabeledDigraph& graph, const std::string& citations_path,
                     const std::string& labels_path);

}  // namespace localdeg
