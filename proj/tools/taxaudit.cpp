// taxaudit: audit whether a corpus's nominal categories are recoverable from its embeddings.

#include <cstdio>
#include <deque>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "taxaudit/error.hpp"
#include "taxaudit/pipeline.hpp"

namespace fs = std::filesystem;
using namespace taxaudit;

namespace {

/// Flags that map one-to-one onto config keys. Values are applied after the config file.
struct KeyedFlags {
    std::vector<std::string> keys;
    std::deque<std::string> values;  // stable addresses for CLI11 bindings
    std::vector<CLI::Option*> options;

    void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
        values.emplace_back();
        options.push_back(app.add_option(flag, values.back(), help + " [" + key + "]"));
        keys.push_back(key);
    }

    bool given(const std::string& key) const {
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (keys[i] == key && options[i]->count() > 0) return true;
        }
        return false;
    }

    void apply(RunConfig& config) const {
        for (std::size_t i = 0; i < options.size(); ++i) {
            if (options[i]->count() > 0) apply_setting(config, keys[i], values[i]);
        }
    }
};

struct CommonArgs {
    std::string config_file;
    KeyedFlags flags;
    bool no_standardize = false;
    bool dump_pca = false;
};

void add_corpus_flags(CLI::App& app, CommonArgs& a) {
    a.flags.add(app, "--corpus", "corpus.path", "Corpus file (CSV id,category,text or JSONL)");
    a.flags.add(app, "--format", "corpus.format", "Corpus format: csv|jsonl (default: by extension)");
    a.flags.add(app, "--categories", "corpus.categories", "Explicit category order, '|'-separated");
    a.flags.add(app, "--name", "corpus.name", "Corpus name used in reports (default: file stem)");
}

void add_embed_flags(CLI::App& app, CommonArgs& a) {
    a.flags.add(app, "--provider", "embed.provider", "Embedding provider: file|http");
    a.flags.add(app, "--vectors", "embed.vectors", "Vector store (JSONL id/vector) for the file provider");
    a.flags.add(app, "--endpoint", "embed.endpoint", "Embeddings endpoint URL for the http provider");
    a.flags.add(app, "--model", "embed.model", "Model identifier sent to the endpoint");
    a.flags.add(app, "--token-env", "embed.token_env", "Environment variable holding the API token");
    a.flags.add(app, "--cache", "embed.cache", "Embedding cache file (http provider)");
    a.flags.add(app, "--batch", "embed.batch", "Texts per request (max 64 recommended)");
    a.flags.add(app, "--parallel", "embed.parallel", "Concurrent requests");
    a.flags.add(app, "--timeout-ms", "embed.timeout_ms", "Request timeout in milliseconds");
}

void add_analysis_flags(CLI::App& app, CommonArgs& a) {
    a.flags.add(app, "--pcs", "reduce.pcs", "Principal components to extract");
    a.flags.add(app, "--eta2-threshold", "reduce.eta2", "Drop components with eta-squared below this");
    app.add_flag("--no-standardize", a.no_standardize, "Cluster on raw PC scores [reduce.standardize]");
    a.flags.add(app, "--k", "cluster.k", "Number of clusters");
    a.flags.add(app, "--restarts", "cluster.restarts", "k-means restarts");
    a.flags.add(app, "--seed", "cluster.seed", "Root random seed");
    a.flags.add(app, "--tol", "cluster.tol", "Centroid displacement tolerance");
    a.flags.add(app, "--max-iter", "cluster.max_iter", "Lloyd iterations per restart");
    a.flags.add(app, "--init", "cluster.init", "Seeding: kmeanspp|random-points");
    a.flags.add(app, "--out", "output.prefix", "Output prefix");
    a.flags.add(app, "--formats", "output.formats", "Comma list of markdown,json,csv");
    a.flags.add(app, "--scatter", "output.scatter", "Component pair for scatter CSV, e.g. 1,2");
    app.add_flag("--dump-pca", a.dump_pca, "Also write <prefix>.pca.json [output.dump_pca]");
}

RunConfig build_config(const CommonArgs& a) {
    RunConfig config;
    if (!a.config_file.empty()) {
        for (const auto& [k, v] : read_config_file(a.config_file)) apply_setting(config, k, v);
    }
    a.flags.apply(config);
    // a vector store or endpoint on the command line picks the provider unless one was named
    if (!a.flags.given("embed.provider")) {
        if (a.flags.given("embed.vectors")) config.provider = "file";
        else if (a.flags.given("embed.endpoint")) config.provider = "http";
    }
    if (a.no_standardize) config.standardize = false;
    if (a.dump_pca) config.dump_pca = true;
    return config;
}

Corpus load_configured_corpus(const RunConfig& config) {
    if (config.corpus_path.empty()) throw Error("config", "missing-corpus", "set corpus.path or --corpus");
    auto format = config.corpus_format.value_or(corpus_format_for(config.corpus_path));
    return load_corpus(config.corpus_path, format, config.categories);
}

int cmd_ingest(const CommonArgs& a, const std::string& out) {
    auto config = build_config(a);
    auto corpus = load_configured_corpus(config);
    std::map<std::string, std::size_t> counts;
    for (const auto& e : corpus.elements) ++counts[e.category];
    std::cout << fmt::format("{} elements, {} categories\n", corpus.size(), corpus.categories.size());
    for (const auto& c : corpus.categories) std::cout << fmt::format("  {:>4}  {}\n", counts[c], c);
    auto diagnostics = validate_corpus(corpus);
    for (const auto& d : diagnostics) std::cout << "warning: " << to_string(d) << "\n";
    if (!out.empty()) {
        save_corpus(corpus, out, corpus_format_for(out));
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

int cmd_embed(const CommonArgs& a, const std::string& out) {
    auto config = build_config(a);
    auto corpus = load_configured_corpus(config);
    EmbedStats stats;
    EmbeddingMatrix m;
    if (config.provider == "file") {
        if (config.vectors_path.empty()) throw Error("embedding", "missing-vector-store", "no vector store configured");
        m = embed_corpus(corpus, FileProvider{config.vectors_path}, std::nullopt, &stats);
    } else {
        m = embed_corpus(corpus, config.http, config.cache_path, &stats);
    }
    VectorStore store;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        Eigen::RowVectorXd row = m.rows.row(static_cast<Eigen::Index>(i));
        store[corpus.elements[i].id] = std::vector<double>(row.data(), row.data() + row.size());
    }
    write_vector_store(out, store);
    std::cout << fmt::format("{} x {} embeddings from {} ({} fetched, {} cached, {} requests); wrote {}\n", m.size(),
                             m.dim(), m.provider_tag, stats.texts_fetched, stats.cache_hits, stats.requests, out);
    return 0;
}

int cmd_analyze(const CommonArgs& a) {
    auto config = build_config(a);
    auto result = run_analyze(config);
    const auto& b = result.bundle;
    std::cout << fmt::format("{}: accuracy {}% ({}/{}), {} mismatches, {} of {} components kept\n", b.corpus_name,
                             format_percent(b.accuracy.value), b.accuracy.matched, b.accuracy.total,
                             b.mismatches.size(), b.kept_pcs().size(), b.components.size());
    for (const auto& p : result.written) std::cout << "wrote " << p.string() << "\n";
    return 0;
}

int cmd_report(const std::string& bundle_path, const std::string& prefix, const std::string& formats,
               const std::string& scatter) {
    auto bundle = load_run(bundle_path);
    RunConfig c;
    if (!formats.empty()) apply_setting(c, "output.formats", formats);
    if (!scatter.empty()) apply_setting(c, "output.scatter", scatter);
    std::map<std::string, std::string> files;
    if (c.write_markdown) files.merge(render(bundle, ReportFormat::Markdown));
    if (c.write_json) files.merge(render(bundle, ReportFormat::Json));
    if (c.write_csv) files.merge(render(bundle, ReportFormat::CsvSet));
    if (c.scatter_pair) files["scatter.csv"] = scatter_data(bundle.elements, bundle.kept_pcs().size(), *c.scatter_pair);
    if (auto parent = fs::path(prefix).parent_path(); !parent.empty()) fs::create_directories(parent);
    for (const auto& [suffix, content] : files) {
        auto path = output_path(prefix, suffix);
        std::FILE* f = std::fopen(path.string().c_str(), "wb");
        if (!f) throw Error("report", "unwritable-output", path.string());
        std::fwrite(content.data(), 1, content.size(), f);
        std::fclose(f);
        std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
}

int cmd_compare(const std::vector<std::string>& runs) {
    std::vector<CompareRow> rows;
    for (const auto& r : runs) rows.push_back(summarize(load_run(r)));
    std::cout << render_compare(rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"taxaudit: check whether nominal categories are recoverable from embedding clusters"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("taxaudit ") + kToolVersion);

    CommonArgs ingest_args, embed_args, analyze_args;
    std::string ingest_out, embed_out;

    auto* ingest = app.add_subcommand("ingest", "Load and validate a corpus");
    ingest->add_option("--config", ingest_args.config_file, "key = value config file");
    add_corpus_flags(*ingest, ingest_args);
    ingest->add_option("--write", ingest_out, "Write the normalized corpus (format by extension)");

    auto* embed = app.add_subcommand("embed", "Fetch embeddings and write an id-keyed vector store");
    embed->add_option("--config", embed_args.config_file, "key = value config file");
    add_corpus_flags(*embed, embed_args);
    add_embed_flags(*embed, embed_args);
    embed->add_option("--write", embed_out, "Output vector store (JSONL)")->required();

    auto* analyze = app.add_subcommand("analyze", "Run PCA, k-means, and category alignment; write reports");
    analyze->add_option("--config", analyze_args.config_file, "key = value config file");
    add_corpus_flags(*analyze, analyze_args);
    add_embed_flags(*analyze, analyze_args);
    add_analysis_flags(*analyze, analyze_args);

    std::string bundle_path, report_prefix, report_formats, report_scatter;
    auto* report = app.add_subcommand("report", "Re-render reports from a saved <prefix>.report.json");
    report->add_option("--bundle", bundle_path, "Bundle written by analyze")->required();
    report->add_option("--out", report_prefix, "Output prefix")->required();
    report->add_option("--formats", report_formats, "Comma list of markdown,json,csv");
    report->add_option("--scatter", report_scatter, "Component pair for scatter CSV, e.g. 1,2");

    std::vector<std::string> runs;
    auto* compare = app.add_subcommand("compare", "Side-by-side accuracy summary of finished runs");
    compare->add_option("runs", runs, "Report JSON files or config files of finished runs")->required()->expected(2, -1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*ingest) return cmd_ingest(ingest_args, ingest_out);
        if (*embed) return cmd_embed(embed_args, embed_out);
        if (*analyze) return cmd_analyze(analyze_args);
        if (*report) return cmd_report(bundle_path, report_prefix, report_formats, report_scatter);
        if (*compare) return cmd_compare(runs);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::User ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
