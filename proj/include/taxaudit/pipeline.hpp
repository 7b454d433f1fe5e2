#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "taxaudit/cluster.hpp"
#include "taxaudit/corpus.hpp"
#include "taxaudit/embedding.hpp"
#include "taxaudit/reduce.hpp"
#include "taxaudit/report.hpp"

namespace taxaudit {

/// Settings for one analysis run. Every field has a config-file key (see config_keys()).
struct RunConfig {
    std::filesystem::path corpus_path;
    std::optional<CorpusFormat> corpus_format;           // default: by extension
    std::optional<std::vector<std::string>> categories;  // explicit row order
    std::string name;                                    // default: corpus file stem

    std::string provider = "file";                       // file | http
    std::filesystem::path vectors_path;
    HttpProvider http;
    std::optional<std::filesystem::path> cache_path;

    std::size_t pcs = 5;
    double eta2_threshold = 0.05;
    bool standardize = true;

    KMeansConfig kmeans;

    std::filesystem::path output_prefix = "taxaudit";
    bool write_markdown = true;
    bool write_json = true;
    bool write_csv = true;
    std::optional<std::pair<std::size_t, std::size_t>> scatter_pair;  // default (1, 2) when two components survive
    bool dump_pca = false;
};

/// Apply one `key = value` setting. Throws Error("config", ...) for unknown keys or bad values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Flat `key = value` file; `#` starts a comment. Later keys override earlier ones.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

/// Every key the config file and echo understand, in echo order.
const std::vector<std::string>& config_keys();

/// The effective settings as key/value pairs; enough to reproduce the run.
std::vector<std::pair<std::string, std::string>> echo_config(const RunConfig& config);

/// Throws unless the config is usable (paths exist, values in range).
void validate_config(const RunConfig& config);

struct AnalysisOutput {
    AnalysisBundle bundle;
    std::vector<std::filesystem::path> written;
};

/// Load, embed, reduce, cluster, align on already-loaded inputs. No I/O.
AnalysisBundle analyze(const Corpus& corpus, const EmbeddingMatrix& embeddings, const RunConfig& config,
                       PCModel* fitted = nullptr);

/// Full pipeline for one corpus: reads inputs, writes every requested output under the prefix.
AnalysisOutput run_analyze(const RunConfig& config);

/// One row of a compare summary.
struct CompareRow {
    std::string corpus;
    std::size_t n = 0;
    double accuracy = 0.0;
    long matched = 0;
    std::size_t mismatches = 0;
};

CompareRow summarize(const AnalysisBundle& bundle);
std::string render_compare(const std::vector<CompareRow>& rows);

/// Load the bundle written by a run: accepts a `.report.json` path or a config file whose
/// output prefix points at one.
AnalysisBundle load_run(const std::filesystem::path& path);

/// Path for an output file: "<prefix>.<suffix>".
std::filesystem::path output_path(const std::filesystem::path& prefix, const std::string& suffix);

std::string pca_to_json(const PCModel& model);

}  // namespace taxaudit
