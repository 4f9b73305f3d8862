// Command-line front end: ingest checks, tier analyses, cross-tier queries,
// single-sample fits, synthetic graph generation, and CCDF plot data.
#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "localdeg/generate.hpp"
#include "localdeg/ingest.hpp"
#include "localdeg/report.hpp"

using namespace localdeg;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ColumnSel parse_column(const std::string& s) {
    if (!s.empty() && std::all_of(s.begin(), s.end(),
                                  [](unsigned char c) { return std::isdigit(c); }))
        return ColumnSel::at(std::stoul(s));
    return ColumnSel::named(s);
}

// Input file options shared by every subcommand that loads the citation graph.
struct IngestArgs {
    std::string labels_path;
    std::string citations_path;
    std::string label_delim = ",";
    std::string citation_delim = ",";
    bool no_header = false;
    std::string id_col = "PATENT";
    std::string cat_col = "CAT";
    std::string subcat_col = "SUBCAT";
    bool no_category_check = false;
    std::string citing_col = "CITING";
    std::string cited_col = "CITED";

    void add(CLI::App& cmd) {
        cmd.add_option("--labels", labels_path, "patent attribute file (id, category, subcategory)")
            ->required();
        cmd.add_option("--citations", citations_path, "citation edge file (citing, cited)")
            ->required();
        cmd.add_option("--label-delim", label_delim, "label file delimiter (default ,)");
        cmd.add_option("--citation-delim", citation_delim, "citation file delimiter (default ,)");
        cmd.add_flag("--no-header", no_header, "files carry no header row; columns are indices");
        cmd.add_option("--id-col", id_col, "patent id column (name or index)");
        cmd.add_option("--cat-col", cat_col, "category column (name or index)");
        cmd.add_option("--subcat-col", subcat_col, "subcategory column (name or index)");
        cmd.add_flag("--no-category-check", no_category_check,
                     "skip the category-vs-subcategory consistency check");
        cmd.add_option("--citing-col", citing_col, "citing column (name or index)");
        cmd.add_option("--cited-col", cited_col, "cited column (name or index)");
    }

    LabelFormat label_format() const {
        LabelFormat f;
        if (label_delim.size() != 1) throw std::runtime_error("--label-delim must be one character");
        f.csv.delimiter = label_delim[0];
        f.csv.has_header = !no_header;
        f.id = parse_column(id_col);
        f.subcategory = parse_column(subcat_col);
        if (no_category_check) f.category.reset();
        else f.category = parse_column(cat_col);
        return f;
    }

    CitationFormat citation_format() const {
        CitationFormat f;
        if (citation_delim.size() != 1)
            throw std::runtime_error("--citation-delim must be one character");
        f.csv.delimiter = citation_delim[0];
        f.csv.has_header = !no_header;
        f.citing = parse_column(citing_col);
        f.cited = parse_column(cited_col);
        return f;
    }
};

// Fitting and reporting knobs shared by the analysis subcommands.
struct FitArgs {
    std::uint32_t xmin = 1;
    bool scan_xmin = false;
    std::uint32_t scan_limit = 0;
    std::size_t min_tail = 50;
    double threshold = 0.1;
    std::uint64_t seed = FitOptions{}.seed;
    bool no_polish = false;
    unsigned threads = 0;

    void add(CLI::App& cmd) {
        cmd.add_option("--xmin", xmin, "fixed tail cutoff (default 1)");
        cmd.add_flag("--scan-xmin", scan_xmin, "pick the cutoff by KS scan instead");
        cmd.add_option("--scan-limit", scan_limit, "upper bound for the KS scan (0 = data-driven)");
        cmd.add_option("--min-tail", min_tail, "minimum tail sample count (default 50)");
        cmd.add_option("--threshold", threshold, "significance threshold (default 0.1)");
        cmd.add_option("--seed", seed, "optimizer restart seed");
        cmd.add_flag("--no-polish", no_polish, "skip the per-coordinate refinement pass");
        cmd.add_option("--threads", threads, "fit worker threads (default: hardware)");
    }

    ReportOptions options() const {
        ReportOptions o;
        o.fit.xmin = scan_xmin ? XminPolicy::scan_ks(scan_limit) : XminPolicy::fixed(xmin);
        o.fit.min_tail = min_tail;
        o.fit.seed = seed;
        o.fit.polish = !no_polish;
        o.threshold = threshold;
        o.threads = threads;
        return o;
    }
};

std::vector<std::uint32_t> read_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::uint32_t> v;
    long long x;
    while (in >> x) {
        if (x < 0) throw std::runtime_error("negative sample in " + path);
        v.push_back(static_cast<std::uint32_t>(x));
    }
    if (!in.eof()) throw std::runtime_error("non-integer token in " + path);
    return v;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw std::runtime_error("cannot write " + path);
}

IngestResult load_graph(const IngestArgs& ia) {
    return ingest_graph(ia.labels_path, ia.citations_path, ia.label_format(),
                        ia.citation_format());
}

nlohmann::json dataset_json(const IngestResult& in) {
    nlohmann::json ingest;
    to_json(ingest, in.report);
    return nlohmann::json{{"graph", graph_fingerprint(in.graph)}, {"ingest", std::move(ingest)}};
}

int cmd_ingest_check(const IngestArgs& ia, const std::string& json_path) {
    const auto t0 = std::chrono::steady_clock::now();
    LabelLoad ll = load_labels(ia.labels_path, ia.label_format());
    EdgeLoad el = load_citations(ia.citations_path, ll.labels, ia.citation_format());
    el.report.label_row_count = ll.rows;
    el.report.label_skipped_count = ll.skipped;
    el.report.label_count = ll.labels.size();
    el.report.label_file_fnv1a = ll.file_fnv1a;

    std::cout << to_text(el.report);
    std::cout << "elapsed_seconds=" << seconds_since(t0) << "\n";
    if (!json_path.empty()) {
        nlohmann::json j;
        to_json(j, el.report);
        write_text(json_path, j.dump(2) + "\n");
    }
    if (!el.report.conserves()) {
        std::cerr << "error: ingest counts do not add up\n";
        return 1;
    }
    return 0;
}

int cmd_analyze(const IngestArgs& ia, const FitArgs& fa, const std::string& out_dir, int tier,
                std::uint16_t category) {
    const auto t0 = std::chrono::steady_clock::now();
    const IngestResult in = load_graph(ia);
    const double t_ingest = seconds_since(t0);

    const ReportOptions opts = fa.options();
    const TierReport rep =
        tier == 1 ? run_tier1(in.graph, opts) : run_tier2(in.graph, category, opts);
    const double t_analyze = seconds_since(t0) - t_ingest;

    AnalysisRun run;
    run.kind = tier == 1 ? "tier1" : "tier2";
    run.dataset = dataset_json(in);
    run.configuration = to_json(opts);
    if (tier == 2) run.configuration["scope_category"] = category;
    run.outputs = to_json(rep);
    run.tables = csv_tables(rep);
    run.timings = {{"ingest_seconds", t_ingest},
                   {"analyze_seconds", t_analyze},
                   {"total_seconds", seconds_since(t0)}};
    write_analysis_run(out_dir, run);
    std::cout << "wrote " << out_dir << " (" << rep.groups.size() << " groups)\n";
    return 0;
}

// "4:21" -> fit query, "4:21,22" -> pcc query
CrossFitQuery parse_fit_query(const std::string& s) {
    unsigned dest, src;
    char colon;
    std::istringstream ss(s);
    if (!(ss >> dest >> colon >> src) || colon != ':' || !ss.eof())
        throw std::runtime_error("bad --fit query '" + s + "', expected DEST:SUBCAT");
    return {static_cast<std::uint16_t>(dest), static_cast<std::uint16_t>(src)};
}

CrossPccQuery parse_pcc_query(const std::string& s) {
    unsigned dest, a, b;
    char colon, comma;
    std::istringstream ss(s);
    if (!(ss >> dest >> colon >> a >> comma >> b) || colon != ':' || comma != ',' || !ss.eof())
        throw std::runtime_error("bad --pcc query '" + s + "', expected DEST:SUBCAT_A,SUBCAT_B");
    return {static_cast<std::uint16_t>(dest), static_cast<std::uint16_t>(a),
            static_cast<std::uint16_t>(b)};
}

int cmd_cross_tier(const IngestArgs& ia, const FitArgs& fa, const std::string& out_dir,
                   const std::vector<std::string>& fit_specs,
                   const std::vector<std::string>& pcc_specs) {
    std::vector<CrossFitQuery> fq;
    for (const std::string& s : fit_specs) fq.push_back(parse_fit_query(s));
    std::vector<CrossPccQuery> pq;
    for (const std::string& s : pcc_specs) pq.push_back(parse_pcc_query(s));

    const auto t0 = std::chrono::steady_clock::now();
    const IngestResult in = load_graph(ia);
    const double t_ingest = seconds_since(t0);
    const ReportOptions opts = fa.options();
    const CrossTierReport rep = run_cross_tier(in.graph, fq, pq, opts);

    AnalysisRun run;
    run.kind = "cross_tier";
    run.dataset = dataset_json(in);
    run.configuration = to_json(opts);
    run.configuration["fit_queries"] = fit_specs;
    run.configuration["pcc_queries"] = pcc_specs;
    run.outputs = to_json(rep);
    run.tables = csv_tables(rep);
    run.timings = {{"ingest_seconds", t_ingest}, {"total_seconds", seconds_since(t0)}};
    write_analysis_run(out_dir, run);
    std::cout << "wrote " << out_dir << " (" << rep.fits.size() << " fits, " << rep.pccs.size()
              << " correlations)\n";
    return 0;
}

int cmd_fit(const std::string& input, const FitArgs& fa, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::uint32_t> samples = read_samples(input);
    const ReportOptions opts = fa.options();
    const BestFitSet best = select_best(samples, opts.threshold, opts.fit);

    std::string names;
    for (Family f : best.best) {
        if (!names.empty()) names += "+";
        names += family_name(f);
    }
    std::cout << "best: " << names << " (" << samples.size() << " samples, tail "
              << (best.fits.empty() ? 0 : best.fits.front().tail_sample_size) << ")\n";

    if (!out_dir.empty()) {
        AnalysisRun run;
        run.kind = "fit";
        run.dataset = {{"input", input}, {"sample_count", samples.size()}};
        run.configuration = to_json(opts);
        run.outputs = nlohmann::json{{"best_fit", best}};
        run.timings = {{"total_seconds", seconds_since(t0)}};
        write_analysis_run(out_dir, run);
        std::cout << "wrote " << out_dir << "\n";
    }
    return 0;
}

int cmd_generate(const std::string& config_path, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open " + config_path);
    nlohmann::json cfg_json = nlohmann::json::parse(in);
    const GeneratorConfig cfg = GeneratorConfig::from_json(cfg_json);

    const LabeledDigraph g = generate(cfg);
    std::filesystem::create_directories(out_dir);
    const auto dir = std::filesystem::path(out_dir);
    write_graph_csv(g, (dir / "citations.csv").string(), (dir / "labels.csv").string());

    AnalysisRun run;
    run.kind = "generate";
    run.dataset = graph_fingerprint(g);
    run.configuration = cfg;
    run.outputs = {{"citations_csv", "citations.csv"},
                   {"labels_csv", "labels.csv"},
                   {"vertex_count", g.vertex_count()},
                   {"edge_count", g.edge_count()}};
    run.timings = {{"total_seconds", seconds_since(t0)}};
    write_analysis_run(dir, run);
    std::cout << "wrote " << out_dir << " (" << g.vertex_count() << " vertices, "
              << g.edge_count() << " edges)\n";
    return 0;
}

int cmd_ccdf(const std::string& input, const std::vector<std::string>& fit_names,
             const FitArgs& fa, const std::string& out_path) {
    const std::vector<std::uint32_t> samples = read_samples(input);
    std::vector<FitResult> fits;
    for (const std::string& name : fit_names) {
        const auto fam = family_from_name(name);
        if (!fam) throw std::runtime_error("unknown family '" + name + "'");
        fits.push_back(fit(samples, *fam, fa.options().fit));
    }
    const std::string csv = to_csv(emit_ccdf(samples, fits));
    if (out_path.empty() || out_path == "-") std::cout << csv;
    else {
        write_text(out_path, csv);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"local indegree structure toolkit"};
    app.require_subcommand(1);

    int rc = 0;

    auto* check = app.add_subcommand("ingest-check", "load the files and print the ingest report");
    IngestArgs check_ingest;
    check_ingest.add(*check);
    std::string check_json;
    check->add_option("--json", check_json, "also write the report as JSON to this path");
    check->callback([&] { rc = cmd_ingest_check(check_ingest, check_json); });

    auto* t1 = app.add_subcommand("analyze-tier1", "category-level degree analysis");
    IngestArgs t1_ingest;
    FitArgs t1_fit;
    std::string t1_out;
    t1_ingest.add(*t1);
    t1_fit.add(*t1);
    t1->add_option("--out", t1_out, "output directory for the analysis run")->required();
    t1->callback([&] { rc = cmd_analyze(t1_ingest, t1_fit, t1_out, 1, 0); });

    auto* t2 = app.add_subcommand("analyze-tier2", "subcategory analysis inside one category");
    IngestArgs t2_ingest;
    FitArgs t2_fit;
    std::string t2_out;
    std::uint16_t t2_cat = 0;
    t2_ingest.add(*t2);
    t2_fit.add(*t2);
    t2->add_option("--category", t2_cat, "category whose subcategories to analyze")->required();
    t2->add_option("--out", t2_out, "output directory for the analysis run")->required();
    t2->callback([&] { rc = cmd_analyze(t2_ingest, t2_fit, t2_out, 2, t2_cat); });

    auto* ct = app.add_subcommand("cross-tier", "subcategory-to-category channel queries");
    IngestArgs ct_ingest;
    FitArgs ct_fit;
    std::string ct_out;
    std::vector<std::string> ct_fits, ct_pccs;
    ct_ingest.add(*ct);
    ct_fit.add(*ct);
    ct->add_option("--fit", ct_fits, "channel fit query DEST:SUBCAT (repeatable)");
    ct->add_option("--pcc", ct_pccs, "channel PCC query DEST:SUBCAT_A,SUBCAT_B (repeatable)");
    ct->add_option("--out", ct_out, "output directory for the analysis run")->required();
    ct->callback([&] { rc = cmd_cross_tier(ct_ingest, ct_fit, ct_out, ct_fits, ct_pccs); });

    auto* ft = app.add_subcommand("fit", "model selection on a plain sample file");
    FitArgs ft_fit;
    std::string ft_input, ft_out;
    ft->add_option("--input", ft_input, "text file, one integer sample per line")->required();
    ft_fit.add(*ft);
    ft->add_option("--out", ft_out, "optional output directory for the full result");
    ft->callback([&] { rc = cmd_fit(ft_input, ft_fit, ft_out); });

    auto* gen = app.add_subcommand("generate", "synthesize a graph with prescribed channel counts");
    std::string gen_config, gen_out;
    gen->add_option("--config", gen_config, "generator configuration JSON")->required();
    gen->add_option("--out", gen_out, "output directory for labels.csv and citations.csv")
        ->required();
    gen->callback([&] { rc = cmd_generate(gen_config, gen_out); });

    auto* cc = app.add_subcommand("ccdf", "empirical CCDF of a sample file, with fit overlays");
    FitArgs cc_fit;
    std::string cc_input, cc_out;
    std::vector<std::string> cc_fams;
    cc->add_option("--input", cc_input, "text file, one integer sample per line")->required();
    cc->add_option("--family", cc_fams, "family to overlay: PL TPL EXP SE LN LNP (repeatable)");
    cc_fit.add(*cc);
    cc->add_option("--out", cc_out, "output CSV path ('-' for stdout)");
    cc->callback([&] { rc = cmd_ccdf(cc_input, cc_fams, cc_fit, cc_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
