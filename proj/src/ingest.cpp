#include "localdeg/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <memory>

namespace localdeg {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, const char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= kFnvPrime;
    }
    return h;
}

// Buffered line iterator that hashes the file's raw bytes as it reads them.
// Lines are returned without the trailing \n (and without \r for CRLF files).
class LineReader {
public:
    explicit LineReader(const std::string& path)
        : file_(std::fopen(path.c_str(), "rb"), &std::fclose) {
        if (!file_) throw IngestError("cannot open " + path);
        buf_.resize(1 << 20);
    }

    bool next(std::string_view& line) {
        pending_.clear();
        while (true) {
            if (pos_ == end_ && !fill()) {
                if (pending_.empty()) return false;
                break;  // final line without newline
            }
            const char* nl = static_cast<const char*>(
                memchr(buf_.data() + pos_, '\n', end_ - pos_));
            std::size_t take = nl ? static_cast<std::size_t>(nl - (buf_.data() + pos_))
                                  : end_ - pos_;
            pending_.append(buf_.data() + pos_, take);
            pos_ += take + (nl ? 1 : 0);
            if (nl) break;
        }
        if (!pending_.empty() && pending_.back() == '\r') pending_.pop_back();
        line = pending_;
        ++line_no_;
        return true;
    }

    std::uint64_t line_number() const { return line_no_; }
    std::uint64_t digest() const { return digest_; }

private:
    bool fill() {
        std::size_t n = std::fread(buf_.data(), 1, buf_.size(), file_.get());
        if (n == 0) return false;
        digest_ = fnv1a(digest_, buf_.data(), n);
        pos_ = 0;
        end_ = n;
        return true;
    }

    std::unique_ptr<FILE, int (*)(FILE*)> file_;
    std::vector<char> buf_;
    std::size_t pos_ = 0, end_ = 0;
    std::string pending_;
    std::uint64_t line_no_ = 0;
    std::uint64_t digest_ = kFnvOffset;
};

// Splits on the delimiter and strips one pair of surrounding double quotes per
// field. Embedded delimiters inside quotes are not supported; the NBER files
// never use them.
void split_fields(std::string_view line, char delim, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t stop = line.find(delim, start);
        std::string_view f = line.substr(start, stop == line.npos ? line.npos : stop - start);
        if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
        out.push_back(f);
        if (stop == line.npos) return;
        start = stop + 1;
    }
}

std::size_t resolve_column(const ColumnSel& sel, const std::vector<std::string_view>& header,
                           bool has_header, const char* what) {
    if (sel.name.empty()) return sel.index;
    if (!has_header)
        throw IngestError(std::string("column '") + sel.name + "' requested by name for " + what +
                          " but the file has no header row");
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == sel.name) return i;
    std::string avail;
    for (const auto& h : header) {
        if (!avail.empty()) avail += ", ";
        avail += h;
    }
    throw IngestError(std::string("no column named '") + sel.name + "' for " + what +
                      " (header has: " + avail + ")");
}

std::int64_t parse_id(std::string_view f, std::uint64_t line_no, const char* what) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || p != f.data() + f.size() || v < 0)
        throw IngestError(std::string("line ") + std::to_string(line_no) + ": bad " + what +
                          " field '" + std::string(f) + "'");
    return v;
}

void require_width(const std::vector<std::string_view>& fields, std::size_t need,
                   std::uint64_t line_no) {
    if (fields.size() < need)
        throw IngestError("line " + std::to_string(line_no) + ": expected at least " +
                          std::to_string(need) + " fields, got " + std::to_string(fields.size()));
}

}  // namespace

const std::vector<std::uint16_t>& uspc_subcategories() {
    static const std::vector<std::uint16_t> codes = {
        11, 12, 13, 14, 15, 19,                  // chemical
        21, 22, 23, 24,                          // computers & communications
        31, 32, 33, 39,                          // drugs & medical
        41, 42, 43, 44, 45, 46, 49,              // electrical & electronic
        51, 52, 53, 54, 55, 59,                  // mechanical
        61, 62, 63, 64, 65, 66, 67, 68, 69};     // others
    return codes;
}

bool is_uspc_subcategory(std::uint16_t code) {
    const auto& v = uspc_subcategories();
    return std::binary_search(v.begin(), v.end(), code);
}

LabelMap LabelMap::from_pairs(std::vector<std::pair<std::int64_t, std::uint8_t>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    auto dup = std::adjacent_find(pairs.begin(), pairs.end(),
                                  [](auto& a, auto& b) { return a.first == b.first; });
    if (dup != pairs.end())
        throw IngestError("duplicate patent id " + std::to_string(dup->first) +
                          " in label file");
    LabelMap m;
    m.ids_.reserve(pairs.size());
    m.subcat_.reserve(pairs.size());
    for (auto& [id, sc] : pairs) {
        m.ids_.push_back(id);
        m.subcat_.push_back(sc);
    }
    return m;
}

std::optional<std::size_t> LabelMap::find(std::int64_t id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
}

LabelLoad load_labels(const std::string& path, const LabelFormat& fmt) {
    LineReader reader(path);
    std::vector<std::string_view> fields;
    std::string_view line;

    std::vector<std::string_view> header;
    std::vector<std::string> header_store;
    if (fmt.csv.has_header) {
        if (!reader.next(line)) throw IngestError(path + " is empty, expected a header row");
        split_fields(line, fmt.csv.delimiter, fields);
        for (auto f : fields) header_store.emplace_back(f);
        for (const auto& h : header_store) header.emplace_back(h);
    }
    const std::size_t id_col = resolve_column(fmt.id, header, fmt.csv.has_header, "patent id");
    const std::size_t sc_col =
        resolve_column(fmt.subcategory, header, fmt.csv.has_header, "subcategory");
    std::optional<std::size_t> cat_col;
    if (fmt.category)
        cat_col = resolve_column(*fmt.category, header, fmt.csv.has_header, "category");
    const std::size_t width =
        std::max({id_col, sc_col, cat_col.value_or(0)}) + 1;

    const bool filter = !fmt.allowed_subcategories.empty();
    std::vector<std::uint16_t> allowed = fmt.allowed_subcategories;
    std::sort(allowed.begin(), allowed.end());

    LabelLoad out;
    std::vector<std::pair<std::int64_t, std::uint8_t>> pairs;
    while (reader.next(line)) {
        if (line.empty()) continue;
        split_fields(line, fmt.csv.delimiter, fields);
        require_width(fields, width, reader.line_number());
        ++out.rows;

        std::string_view sc_field = fields[sc_col];
        if (sc_field.empty()) {
            ++out.skipped;
            continue;
        }
        std::int64_t sc = parse_id(sc_field, reader.line_number(), "subcategory");
        bool in_set = filter ? std::binary_search(allowed.begin(), allowed.end(), sc)
                             : (sc >= 10 && sc <= 99);
        if (!in_set) {
            ++out.skipped;
            continue;
        }
        if (cat_col && !fields[*cat_col].empty()) {
            std::int64_t cat = parse_id(fields[*cat_col], reader.line_number(), "category");
            if (cat != sc / 10)
                throw IngestError("line " + std::to_string(reader.line_number()) +
                                  ": category " + std::to_string(cat) +
                                  " contradicts subcategory " + std::to_string(sc));
        }
        std::int64_t id = parse_id(fields[id_col], reader.line_number(), "patent id");
        pairs.emplace_back(id, static_cast<std::uint8_t>(sc));
    }
    out.labels = LabelMap::from_pairs(std::move(pairs));
    out.file_fnv1a = reader.digest();
    return out;
}

EdgeLoad load_citations(const std::string& path, const LabelMap& labels,
                        const CitationFormat& fmt) {
    LineReader reader(path);
    std::vector<std::string_view> fields;
    std::string_view line;

    std::vector<std::string_view> header;
    std::vector<std::string> header_store;
    if (fmt.csv.has_header) {
        if (!reader.next(line)) throw IngestError(path + " is empty, expected a header row");
        split_fields(line, fmt.csv.delimiter, fields);
        for (auto f : fields) header_store.emplace_back(f);
        for (const auto& h : header_store) header.emplace_back(h);
    }
    const std::size_t src_col =
        resolve_column(fmt.citing, header, fmt.csv.has_header, "citing patent");
    const std::size_t dst_col =
        resolve_column(fmt.cited, header, fmt.csv.has_header, "cited patent");
    const std::size_t width = std::max(src_col, dst_col) + 1;

    EdgeLoad out;
    IngestReport& rep = out.report;
    std::vector<std::uint64_t> packed;  // (citing ordinal << 32) | cited ordinal

    while (reader.next(line)) {
        if (line.empty()) continue;
        split_fields(line, fmt.csv.delimiter, fields);
        require_width(fields, width, reader.line_number());
        ++rep.raw_edge_count;

        std::int64_t s = parse_id(fields[src_col], reader.line_number(), "citing patent");
        std::int64_t d = parse_id(fields[dst_col], reader.line_number(), "cited patent");
        // classify each raw row into exactly one bucket: self-loop, then
        // unlabeled endpoint, then duplicate (after the full pass), else kept
        if (s == d) {
            ++rep.dropped_self_loop_count;
            continue;
        }
        auto so = labels.find(s), dd = labels.find(d);
        if (!so || !dd) {
            ++rep.dropped_unlabeled_endpoint_count;
            continue;
        }
        packed.push_back((static_cast<std::uint64_t>(*so) << 32) |
                         static_cast<std::uint64_t>(*dd));
    }
    rep.citation_file_fnv1a = reader.digest();

    std::sort(packed.begin(), packed.end());
    rep.retained_with_duplicates = packed.size();
    auto last = std::unique(packed.begin(), packed.end());
    rep.dropped_duplicate_count = static_cast<std::uint64_t>(packed.end() - last);
    packed.erase(last, packed.end());
    rep.retained_edge_count = packed.size();

    // dense ids cover only the ordinals that actually appear; ordinal order is
    // ascending original id, so dense ids inherit that order
    std::vector<std::uint8_t> used(labels.size(), 0);
    for (auto e : packed) {
        used[e >> 32] = 1;
        used[static_cast<std::uint32_t>(e)] = 1;
    }
    std::vector<std::uint32_t> dense_of(labels.size(), UINT32_MAX);
    for (std::size_t o = 0; o < labels.size(); ++o) {
        if (!used[o]) continue;
        dense_of[o] = static_cast<std::uint32_t>(out.vertex_ids.size());
        out.vertex_ids.push_back(labels.id(o));
        out.vertex_labels.push_back(labels.label(o));
    }
    rep.labeled_vertex_count = out.vertex_ids.size();
    rep.label_count = labels.size();

    out.edges.reserve(packed.size());
    for (auto e : packed)
        out.edges.emplace_back(dense_of[e >> 32], dense_of[static_cast<std::uint32_t>(e)]);
    return out;
}

IngestResult ingest_graph(const std::string& label_path, const std::string& citation_path,
                          const LabelFormat& lfmt, const CitationFormat& cfmt) {
    LabelLoad ll = load_labels(label_path, lfmt);
    EdgeLoad el = load_citations(citation_path, ll.labels, cfmt);
    el.report.label_row_count = ll.rows;
    el.report.label_skipped_count = ll.skipped;
    el.report.label_file_fnv1a = ll.file_fnv1a;

    const std::size_t n = el.vertex_ids.size();
    auto graph = LabeledDigraph::from_edges(n, std::move(el.vertex_labels), el.edges,
                                            std::move(el.vertex_ids));
    return {std::move(graph), el.report};
}

std::string to_text(const IngestReport& r) {
    std::string s;
    auto kv = [&s](const char* k, std::uint64_t v) {
        s += k;
        s += '=';
        s += std::to_string(v);
        s += '\n';
    };
    kv("raw_edge_count", r.raw_edge_count);
    kv("retained_edge_count", r.retained_edge_count);
    kv("dropped_unlabeled_endpoint_count", r.dropped_unlabeled_endpoint_count);
    kv("dropped_duplicate_count", r.dropped_duplicate_count);
    kv("dropped_self_loop_count", r.dropped_self_loop_count);
    kv("labeled_vertex_count", r.labeled_vertex_count);
    kv("retained_with_duplicates", r.retained_with_duplicates);
    kv("label_row_count", r.label_row_count);
    kv("label_skipped_count", r.label_skipped_count);
    kv("label_count", r.label_count);
    kv("label_file_fnv1a", r.label_file_fnv1a);
    kv("citation_file_fnv1a", r.citation_file_fnv1a);
    return s;
}

void to_json(nlohmann::json& j, const IngestReport& r) {
    j = nlohmann::json{{"raw_edge_count", r.raw_edge_count},
                       {"retained_edge_count", r.retained_edge_count},
                       {"dropped_unlabeled_endpoint_count", r.dropped_unlabeled_endpoint_count},
                       {"dropped_duplicate_count", r.dropped_duplicate_count},
                       {"dropped_self_loop_count", r.dropped_self_loop_count},
                       {"labeled_vertex_count", r.labeled_vertex_count},
                       {"retained_with_duplicates", r.retained_with_duplicates},
                       {"label_row_count", r.label_row_count},
                       {"label_skipped_count", r.label_skipped_count},
                       {"label_count", r.label_count},
                       {"label_file_fnv1a", r.label_file_fnv1a},
                       {"citation_file_fnv1a", r.citation_file_fnv1a}};
}

}  // namespace localdeg
