#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "taxaudit/corpus.hpp"

namespace taxaudit {

/// One embedding vector per corpus element; row i belongs to element i.
struct EmbeddingMatrix {
    Eigen::MatrixXd rows;  // n x dim
    std::string provider_tag;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(rows.cols()); }
    std::size_t size() const noexcept { return static_cast<std::size_t>(rows.rows()); }
};

/// Throws unless every entry is finite, dim > 0, and some row varies across dimensions.
void check_embedding_matrix(const EmbeddingMatrix& m, std::size_t expected_rows);

using VectorStore = std::map<std::string, std::vector<double>>;

/// JSONL, one `{"id": ..., "vector": [...]}` per line, 17 significant digits.
VectorStore read_vector_store(const std::filesystem::path& path);
void write_vector_store(const std::filesystem::path& path, const VectorStore& store);
std::string format_vector_store(const VectorStore& store);
VectorStore parse_vector_store(std::string_view content);

struct FileProvider {
    std::filesystem::path path;
};

struct HttpProvider {
    std::string endpoint;  // e.g. http://localhost:8080/v1/embeddings
    std::string model;
    std::string token_env = "TAXAUDIT_API_TOKEN";
    std::chrono::milliseconds timeout{30000};
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::size_t batch_size = 64;
    std::size_t parallelism = 4;
};

using EmbeddingProvider = std::variant<FileProvider, HttpProvider>;

/// Counters for one embed_corpus call.
struct EmbedStats {
    std::size_t cache_hits = 0;
    std::size_t texts_fetched = 0;
    std::size_t requests = 0;  // HTTP requests issued, including retries
};

/// Cache key for a text under a model: "<model>:<fnv1a64 hex of text>".
std::string cache_key(std::string_view model, std::string_view text);

/// Fetches (or looks up) one vector per element, in corpus order.
///
/// For the HTTP provider the cache is keyed by model and text, so identical texts are
/// fetched once and a warm cache issues no requests. Fetched vectors are merged into the
/// cache file in a single write after all batches finish.
EmbeddingMatrix embed_corpus(const Corpus& corpus, const EmbeddingProvider& provider,
                             const std::optional<std::filesystem::path>& cache_path = std::nullopt,
                             EmbedStats* stats = nullptr);

/// POST one batch to an embeddings endpoint. Exposed for testing the wire protocol.
std::vector<std::vector<double>> fetch_embeddings(const HttpProvider& provider,
                                                  const std::vector<std::string>& texts,
                                                  std::size_t* requests = nullptr);

}  // namespace taxaudit
