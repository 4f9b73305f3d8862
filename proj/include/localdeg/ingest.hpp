#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "localdeg/graph.hpp"

namespace localdeg {

class IngestError : public std::runtime_error {
public:
    explicit IngestError(const std::string& what) : std::runtime_error(what) {}
};

// Column selector for delimited files: either a header name or a zero-based
// position. Name lookup requires the file to have a header row.
struct ColumnSel {
    std::string name;
    std::size_t index = 0;

    static ColumnSel named(std::string n) { return {std::move(n), 0}; }
    static ColumnSel at(std::size_t i) { return {{}, i}; }
};

struct CsvFormat {
    char delimiter = ',';
    bool has_header = true;
};

// The 36 two-digit subcategory codes of the USPC scheme, grouped under six
// categories (code div 10). Records outside this set are skipped on load.
const std::vector<std::uint16_t>& uspc_subcategories();
bool is_uspc_subcategory(std::uint16_t code);

struct LabelFormat {
    CsvFormat csv;
    ColumnSel id = ColumnSel::named("PATENT");
    ColumnSel subcategory = ColumnSel::named("SUBCAT");
    // When set, the category column is cross-checked against subcategory/10;
    // a contradiction is treated as a malformed row.
    std::optional<ColumnSel> category = ColumnSel::named("CAT");
    // Empty = accept any structurally valid two-digit code.
    std::vector<std::uint16_t> allowed_subcategories = uspc_subcategories();
};

struct CitationFormat {
    CsvFormat csv;
    ColumnSel citing = ColumnSel::named("CITING");
    ColumnSel cited = ColumnSel::named("CITED");
};

// Compact id -> label store, sorted by original id. Ordinals are positions in
// that order and double as a dense pre-graph vertex numbering.
class LabelMap {
public:
    LabelMap() = default;
    // pairs need not be sorted; duplicate ids are rejected
    static LabelMap from_pairs(std::vector<std::pair<std::int64_t, std::uint8_t>> pairs);

    std::size_t size() const { return ids_.size(); }
    std::optional<std::size_t> find(std::int64_t id) const;
    std::int64_t id(std::size_t ordinal) const { return ids_[ordinal]; }
    GroupLabel label(std::size_t ordinal) const {
        return GroupLabel::from_subcategory(subcat_[ordinal]);
    }

private:
    std::vector<std::int64_t> ids_;
    std::vector<std::uint8_t> subcat_;
};

struct LabelLoad {
    LabelMap labels;
    std::uint64_t rows = 0;     // data rows seen
    std::uint64_t skipped = 0;  // blank or out-of-set subcategory
    std::uint64_t file_fnv1a = 0;
};

struct IngestReport {
    std::uint64_t raw_edge_count = 0;
    std::uint64_t retained_edge_count = 0;
    std::uint64_t dropped_unlabeled_endpoint_count = 0;
    std::uint64_t dropped_duplicate_count = 0;
    std::uint64_t dropped_self_loop_count = 0;
    std::uint64_t labeled_vertex_count = 0;  // distinct labeled endpoints of retained edges

    // provenance extras, not part of the conservation identity
    std::uint64_t retained_with_duplicates = 0;
    std::uint64_t label_row_count = 0;
    std::uint64_t label_skipped_count = 0;
    std::uint64_t label_count = 0;
    std::uint64_t label_file_fnv1a = 0;
    std::uint64_t citation_file_fnv1a = 0;

    bool conserves() const {
        return raw_edge_count == retained_edge_count + dropped_unlabeled_endpoint_count +
                                     dropped_duplicate_count + dropped_self_loop_count;
    }
};

std::string to_text(const IngestReport& r);  // key=value, one per line
void to_json(nlohmann::json& j, const IngestReport& r);

struct EdgeLoad {
    // duplicate-free, self-loop-free edges over dense ids 0..vertex_ids.size()-1,
    // sorted by (src, dst); dense order follows ascending original id
    std::vector<std::pair<VertexId, VertexId>> edges;
    std::vector<std::int64_t> vertex_ids;
    std::vector<GroupLabel> vertex_labels;
    IngestReport report;
};

LabelLoad load_labels(const std::string& path, const LabelFormat& fmt = {});
EdgeLoad load_citations(const std::string& path, const LabelMap& labels,
                        const CitationFormat& fmt = {});

struct IngestResult {
    LabeledDigraph graph;
    IngestReport report;
};

// One-shot pipeline: labels, citations, graph. The graph's vertex set is the
// labeled patents incident to at least one retained citation.
IngestResult ingest_graph(const std::string& label_path, const std::string& citation_path,
                          const LabelFormat& lfmt = {}, const CitationFormat& cfmt = {});

}  // namespace localdeg
