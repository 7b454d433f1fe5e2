#include "taxaudit/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "taxaudit/align.hpp"
#include "taxaudit/error.hpp"

namespace taxaudit {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

Error bad_value(const std::string& key, const std::string& value) {
    return Error("config", "bad-value", fmt::format("{} = \"{}\"", key, value));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc{} || res.ptr != last) throw bad_value(key, value);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw bad_value(key, value);
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("report", "unwritable-output", path.string());
    out << content;
}

std::string corpus_format_name(CorpusFormat f) { return f == CorpusFormat::Csv ? "csv" : "jsonl"; }

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "corpus.path",     "corpus.format",   "corpus.categories", "corpus.name",    "embed.provider",
        "embed.vectors",   "embed.endpoint",  "embed.model",       "embed.token_env", "embed.timeout_ms",
        "embed.attempts",  "embed.backoff_ms", "embed.batch",      "embed.parallel", "embed.cache",
        "reduce.pcs",      "reduce.eta2",     "reduce.standardize", "cluster.k",     "cluster.restarts",
        "cluster.seed",    "cluster.tol",     "cluster.max_iter",  "cluster.init",   "output.prefix",
        "output.formats",  "output.scatter",  "output.dump_pca",
    };
    return keys;
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    if (key == "corpus.path") c.corpus_path = value;
    else if (key == "corpus.format") c.corpus_format = parse_corpus_format(value);
    else if (key == "corpus.categories") c.categories = split(value, '|');
    else if (key == "corpus.name") c.name = value;
    else if (key == "embed.provider") {
        if (value != "file" && value != "http") throw bad_value(key, value);
        c.provider = value;
    } else if (key == "embed.vectors") c.vectors_path = value;
    else if (key == "embed.endpoint") c.http.endpoint = value;
    else if (key == "embed.model") c.http.model = value;
    else if (key == "embed.token_env") c.http.token_env = value;
    else if (key == "embed.timeout_ms") c.http.timeout = std::chrono::milliseconds(parse_number<long>(key, value));
    else if (key == "embed.attempts") c.http.attempts = parse_number<int>(key, value);
    else if (key == "embed.backoff_ms") c.http.initial_backoff = std::chrono::milliseconds(parse_number<long>(key, value));
    else if (key == "embed.batch") c.http.batch_size = parse_number<std::size_t>(key, value);
    else if (key == "embed.parallel") c.http.parallelism = parse_number<std::size_t>(key, value);
    else if (key == "embed.cache") {
        if (value.empty()) c.cache_path.reset();
        else c.cache_path = value;
    } else if (key == "reduce.pcs") c.pcs = parse_number<std::size_t>(key, value);
    else if (key == "reduce.eta2") c.eta2_threshold = parse_number<double>(key, value);
    else if (key == "reduce.standardize") c.standardize = parse_bool(key, value);
    else if (key == "cluster.k") c.kmeans.k = parse_number<int>(key, value);
    else if (key == "cluster.restarts") c.kmeans.restarts = parse_number<int>(key, value);
    else if (key == "cluster.seed") c.kmeans.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "cluster.tol") c.kmeans.tolerance = parse_number<double>(key, value);
    else if (key == "cluster.max_iter") c.kmeans.max_iterations = parse_number<int>(key, value);
    else if (key == "cluster.init") c.kmeans.init = parse_kmeans_init(value);
    else if (key == "output.prefix") c.output_prefix = value;
    else if (key == "output.formats") {
        c.write_markdown = c.write_json = c.write_csv = false;
        for (const auto& f : split(value, ',')) {
            if (f == "markdown" || f == "md") c.write_markdown = true;
            else if (f == "json") c.write_json = true;
            else if (f == "csv") c.write_csv = true;
            else throw bad_value(key, value);
        }
    } else if (key == "output.scatter") {
        auto parts = split(value, ',');
        if (parts.size() != 2) throw bad_value(key, value);
        c.scatter_pair = {parse_number<std::size_t>(key, parts[0]), parse_number<std::size_t>(key, parts[1])};
    } else if (key == "output.dump_pca") c.dump_pca = parse_bool(key, value);
    else throw Error("config", "unknown-key", key);
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("config", "missing-config", path.string());
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // '#' opens a comment at line start or after whitespace; "a#b" stays a value
        for (std::size_t h = line.find('#'); h != std::string::npos; h = line.find('#', h + 1)) {
            if (h == 0 || line[h - 1] == ' ' || line[h - 1] == '\t') {
                line.resize(h);
                break;
            }
        }
        auto t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error("config", "parse-error", fmt::format("{}:{}: expected key = value", path.string(), lineno));
        }
        out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> echo_config(const RunConfig& c) {
    std::vector<std::pair<std::string, std::string>> out;
    auto add = [&](std::string k, std::string v) { out.emplace_back(std::move(k), std::move(v)); };
    add("corpus.path", c.corpus_path.string());
    add("corpus.format", corpus_format_name(c.corpus_format.value_or(corpus_format_for(c.corpus_path))));
    if (c.categories) {
        std::string joined;
        for (std::size_t i = 0; i < c.categories->size(); ++i) joined += (i ? "|" : "") + (*c.categories)[i];
        add("corpus.categories", joined);
    }
    add("corpus.name", c.name.empty() ? c.corpus_path.stem().string() : c.name);
    add("embed.provider", c.provider);
    if (c.provider == "file") {
        add("embed.vectors", c.vectors_path.string());
    } else {
        add("embed.endpoint", c.http.endpoint);
        add("embed.model", c.http.model);
        add("embed.token_env", c.http.token_env);
        add("embed.batch", std::to_string(c.http.batch_size));
        if (c.cache_path) add("embed.cache", c.cache_path->string());
    }
    add("reduce.pcs", std::to_string(c.pcs));
    add("reduce.eta2", fmt_double(c.eta2_threshold));
    add("reduce.standardize", c.standardize ? "true" : "false");
    add("cluster.k", std::to_string(c.kmeans.k));
    add("cluster.restarts", std::to_string(c.kmeans.restarts));
    add("cluster.seed", std::to_string(c.kmeans.seed));
    add("cluster.tol", fmt_double(c.kmeans.tolerance));
    add("cluster.max_iter", std::to_string(c.kmeans.max_iterations));
    add("cluster.init", std::string(to_string(c.kmeans.init)));
    return out;
}

void validate_config(const RunConfig& c) {
    if (c.corpus_path.empty()) throw Error("config", "missing-corpus", "set corpus.path or --corpus");
    if (c.provider == "file") {
        if (c.vectors_path.empty()) throw Error("embedding", "missing-vector-store", "no vector store configured");
    } else {
        if (c.http.endpoint.empty()) throw Error("config", "missing-endpoint", "embed.endpoint is required for http");
        if (c.http.model.empty()) throw Error("config", "missing-model", "embed.model is required for http");
    }
    if (c.pcs < 1) throw Error("config", "bad-value", "reduce.pcs must be >= 1");
    if (!(c.eta2_threshold >= 0.0 && c.eta2_threshold <= 1.0)) throw Error("config", "bad-value", "reduce.eta2 must be in [0, 1]");
    if (c.kmeans.k < 1) throw Error("config", "bad-value", "cluster.k must be >= 1");
    if (c.kmeans.restarts < 1) throw Error("config", "bad-value", "cluster.restarts must be >= 1");
    if (c.kmeans.max_iterations < 1) throw Error("config", "bad-value", "cluster.max_iter must be >= 1");
    if (!(c.kmeans.tolerance >= 0.0)) throw Error("config", "bad-value", "cluster.tol must be >= 0");
}

AnalysisBundle analyze(const Corpus& corpus, const EmbeddingMatrix& embeddings, const RunConfig& config,
                       PCModel* fitted) {
    const auto labels = corpus.label_indices();
    const int k = config.kmeans.k;
    if (corpus.size() < static_cast<std::size_t>(std::max(k, 1))) {
        throw Error("cluster", "n < k", fmt::format("n = {}, k = {}", corpus.size(), k));
    }
    check_embedding_matrix(embeddings, corpus.size());

    PCModel model = pca_fit(embeddings, config.pcs);
    if (fitted) *fitted = model;
    auto screened = select_components(model, labels, config.eta2_threshold);
    PCModel analyzed = config.standardize ? standardize_scores(screened.model) : screened.model;

    auto km = kmeans_fit(analyzed.scores, config.kmeans);

    // number clusters by their matched category so the table diagonal carries the matches
    auto first = align(corpus, km.assignments, k);
    auto relabel = canonical_cluster_order(first.mapping, static_cast<int>(corpus.categories.size()));
    std::vector<int> assignments(km.assignments.size());
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        assignments[i] = relabel[static_cast<std::size_t>(km.assignments[i])];
    }
    auto aligned = align(corpus, assignments, k);

    AnalysisBundle b;
    b.corpus_name = config.name.empty() ? config.corpus_path.stem().string() : config.name;
    b.n = corpus.size();
    b.categories = corpus.categories;
    b.provider_tag = embeddings.provider_tag;
    b.dim = embeddings.dim();
    b.standardized = analyzed.standardized;

    const auto shares = model.explained_share();
    for (std::size_t c = 0; c < model.n_components(); ++c) {
        b.components.push_back({c + 1, model.eigenvalues(static_cast<Eigen::Index>(c)),
                                shares(static_cast<Eigen::Index>(c)), screened.screen.eta_squared[c],
                                static_cast<bool>(screened.screen.kept[c])});
    }

    b.k = k;
    b.restarts = config.kmeans.restarts;
    b.best_restart = km.best_restart;
    b.iterations = km.iterations;
    b.converged = km.converged;
    b.inertia = km.inertia;

    b.table = aligned.table;
    b.mapping = aligned.mapping;
    b.accuracy = aligned.accuracy;
    b.mismatches = aligned.mismatches;
    b.cluster_means = cluster_means(analyzed.scores, assignments, k);
    b.cluster_sizes.assign(static_cast<std::size_t>(k), 0);
    for (int a : assignments) ++b.cluster_sizes[static_cast<std::size_t>(a)];

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        ElementRecord r{corpus.elements[i].id, corpus.elements[i].category, assignments[i], {}};
        for (Eigen::Index c = 0; c < analyzed.scores.cols(); ++c) r.scores.push_back(analyzed.scores(static_cast<Eigen::Index>(i), c));
        b.elements.push_back(std::move(r));
    }
    b.config = echo_config(config);
    check_bundle(b);
    return b;
}

std::filesystem::path output_path(const std::filesystem::path& prefix, const std::string& suffix) {
    auto p = prefix;
    p += "." + suffix;
    return p;
}

std::string pca_to_json(const PCModel& model) {
    nlohmann::ordered_json j;
    j["standardized"] = model.standardized;
    j["eigenvalues"] = std::vector<double>(model.eigenvalues.data(), model.eigenvalues.data() + model.eigenvalues.size());
    j["mean"] = std::vector<double>(model.mean.data(), model.mean.data() + model.mean.size());
    auto rows = [](const Eigen::MatrixXd& m) {
        nlohmann::ordered_json out = nlohmann::ordered_json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            Eigen::RowVectorXd row = m.row(r);
            out.push_back(std::vector<double>(row.data(), row.data() + row.size()));
        }
        return out;
    };
    j["components"] = rows(model.components);
    j["scores"] = rows(model.scores);
    return j.dump() + "\n";
}

AnalysisOutput run_analyze(const RunConfig& config) {
    validate_config(config);
    const auto format = config.corpus_format.value_or(corpus_format_for(config.corpus_path));
    auto corpus = load_corpus(config.corpus_path, format, config.categories);

    EmbeddingMatrix embeddings;
    if (config.provider == "file") {
        embeddings = embed_corpus(corpus, FileProvider{config.vectors_path});
    } else {
        embeddings = embed_corpus(corpus, config.http, config.cache_path);
    }

    AnalysisOutput out;
    PCModel fitted;
    out.bundle = analyze(corpus, embeddings, config, &fitted);

    const auto kept = out.bundle.kept_pcs().size();
    std::map<std::string, std::string> files;
    if (config.write_markdown) files.merge(render(out.bundle, ReportFormat::Markdown));
    if (config.write_json) files.merge(render(out.bundle, ReportFormat::Json));
    if (config.write_csv) files.merge(render(out.bundle, ReportFormat::CsvSet));
    if (config.scatter_pair) {
        files["scatter.csv"] = scatter_data(out.bundle.elements, kept, *config.scatter_pair);
    } else if (kept >= 2) {
        files["scatter.csv"] = scatter_data(out.bundle.elements, kept, {1, 2});
    }
    if (config.dump_pca) files["pca.json"] = pca_to_json(fitted);

    if (auto parent = config.output_prefix.parent_path(); !parent.empty()) std::filesystem::create_directories(parent);
    for (const auto& [suffix, content] : files) {
        auto path = output_path(config.output_prefix, suffix);
        write_text(path, content);
        out.written.push_back(path);
    }
    return out;
}

CompareRow summarize(const AnalysisBundle& b) {
    return {b.corpus_name, b.n, b.accuracy.value, b.accuracy.matched, b.mismatches.size()};
}

std::string render_compare(const std::vector<CompareRow>& rows) {
    std::string out = "| Corpus | n | Accuracy % | Matched | Mismatches |\n| --- | ---: | ---: | ---: | ---: |\n";
    for (const auto& r : rows) {
        out += fmt::format("| {} | {} | {} | {} | {} |\n", r.corpus, r.n, format_percent(r.accuracy), r.matched,
                           r.mismatches);
    }
    return out;
}

AnalysisBundle load_run(const std::filesystem::path& path) {
    std::filesystem::path bundle_path = path;
    if (path.extension() != ".json") {
        if (!std::filesystem::exists(path)) throw Error("compare", "missing-run", path.string());
        RunConfig c;
        for (const auto& [k, v] : read_config_file(path)) apply_setting(c, k, v);
        bundle_path = output_path(c.output_prefix, "report.json");
    }
    if (!std::filesystem::exists(bundle_path)) throw Error("compare", "missing-run", bundle_path.string());
    std::ifstream in(bundle_path);
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error&) {
        throw Error("compare", "unreadable-run", bundle_path.string());
    }
    return bundle_from_json(j);
}

}  // namespace taxaudit
