#include "taxaudit/embedding.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "taxaudit/error.hpp"

namespace taxaudit {

namespace {

Error store_error(std::size_t line, const std::string& what) {
    return Error("embedding", "malformed-vector-store", fmt::format("line {}: {}", line, what));
}

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error("embedding", "bad-endpoint", url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::vector<std::vector<double>> parse_embedding_response(const std::string& body, std::size_t expected) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
        throw Error("embedding", "bad-response", "body is not JSON");
    }
    if (!j.is_object() || !j.contains("data") || !j["data"].is_array()) {
        throw Error("embedding", "bad-response", "missing \"data\" array");
    }
    const auto& data = j["data"];
    if (data.size() != expected) {
        throw Error("embedding", "bad-response",
                    fmt::format("expected {} embeddings, got {}", expected, data.size()));
    }
    std::vector<std::vector<double>> out(expected);
    std::vector<bool> filled(expected, false);
    for (std::size_t pos = 0; pos < data.size(); ++pos) {
        const auto& item = data[pos];
        std::size_t index = pos;
        if (item.contains("index")) {
            if (!item["index"].is_number_integer()) throw Error("embedding", "bad-response", "non-integer index");
            auto raw = item["index"].get<long long>();
            if (raw < 0 || static_cast<std::size_t>(raw) >= expected) {
                throw Error("embedding", "bad-response", fmt::format("index {} out of range", raw));
            }
            index = static_cast<std::size_t>(raw);
        }
        if (filled[index]) throw Error("embedding", "bad-response", fmt::format("duplicate index {}", index));
        if (!item.contains("embedding") || !item["embedding"].is_array()) {
            throw Error("embedding", "bad-response", "missing \"embedding\" array");
        }
        auto& vec = out[index];
        for (const auto& v : item["embedding"]) {
            if (!v.is_number()) throw Error("embedding", "bad-response", "non-numeric embedding entry");
            vec.push_back(v.get<double>());
        }
        filled[index] = true;
    }
    return out;
}

}  // namespace

void check_embedding_matrix(const EmbeddingMatrix& m, std::size_t expected_rows) {
    if (m.size() != expected_rows) {
        throw Error("embedding", "row-count-mismatch",
                    fmt::format("{} rows for {} elements", m.size(), expected_rows));
    }
    if (m.dim() == 0) throw Error("embedding", "empty-vectors");
    if (!m.rows.allFinite()) throw Error("embedding", "non-finite-entry");
    bool any_varies = false;
    for (Eigen::Index i = 0; i < m.rows.rows() && !any_varies; ++i) {
        any_varies = m.rows.row(i).maxCoeff() != m.rows.row(i).minCoeff();
    }
    if (!any_varies) throw Error("embedding", "constant-vectors", "no row varies across dimensions");
}

std::string format_vector_store(const VectorStore& store) {
    std::optional<std::size_t> dim;
    std::string out;
    for (const auto& [id, vec] : store) {
        if (dim && *dim != vec.size()) {
            throw Error("embedding", "dimension-mismatch",
                        fmt::format("\"{}\" has length {}, expected {}", id, vec.size(), *dim));
        }
        dim = vec.size();
        out += "{\"id\":";
        out += nlohmann::json(id).dump();
        out += ",\"vector\":[";
        for (std::size_t i = 0; i < vec.size(); ++i) {
            if (!std::isfinite(vec[i])) throw Error("embedding", "non-finite-entry", id);
            if (i) out.push_back(',');
            append_double(out, vec[i]);
        }
        out += "]}\n";
    }
    return out;
}

VectorStore parse_vector_store(std::string_view content) {
    VectorStore store;
    std::optional<std::size_t> dim;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start < content.size()) {
        auto end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        auto line = content.substr(start, end - start);
        start = end + 1;
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw store_error(lineno, "invalid JSON");
        }
        if (!j.is_object()) throw store_error(lineno, "expected a JSON object");
        if (!j.contains("id") || !j["id"].is_string()) throw store_error(lineno, "missing \"id\"");
        if (!j.contains("vector") || !j["vector"].is_array()) throw store_error(lineno, "missing \"vector\"");
        std::vector<double> vec;
        vec.reserve(j["vector"].size());
        for (const auto& v : j["vector"]) {
            if (!v.is_number()) throw store_error(lineno, "non-numeric vector entry");
            vec.push_back(v.get<double>());
        }
        auto id = j["id"].get<std::string>();
        if (dim && vec.size() != *dim) {
            throw Error("embedding", "dimension-mismatch",
                        fmt::format("line {}: \"{}\" has length {}, expected {}", lineno, id, vec.size(), *dim));
        }
        dim = vec.size();
        if (!store.emplace(id, std::move(vec)).second) throw store_error(lineno, "duplicate id \"" + id + "\"");
    }
    return store;
}

VectorStore read_vector_store(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error("embedding", "missing-vector-store", path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("embedding", "missing-vector-store", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_vector_store(ss.str());
}

void write_vector_store(const std::filesystem::path& path, const VectorStore& store) {
    auto content = format_vector_store(store);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("embedding", "unwritable-cache", path.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::string cache_key(std::string_view model, std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return fmt::format("{}:{:016x}", model, h);
}

std::vector<std::vector<double>> fetch_embeddings(const HttpProvider& provider,
                                                  const std::vector<std::string>& texts,
                                                  std::size_t* requests) {
    auto url = split_url(provider.endpoint);
    httplib::Client client(url.origin);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(provider.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(provider.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!provider.token_env.empty()) {
        if (const char* token = std::getenv(provider.token_env.c_str()); token && *token) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }

    nlohmann::ordered_json body;
    body["model"] = provider.model;
    body["input"] = texts;
    const auto payload = body.dump();

    std::string last_failure;
    auto backoff = provider.initial_backoff;
    for (int attempt = 1; attempt <= std::max(provider.attempts, 1); ++attempt) {
        if (requests) ++*requests;
        auto res = client.Post(url.path, headers, payload, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            return parse_embedding_response(res->body, texts.size());
        }
        if (res && res->status < 500) {
            throw Error("embedding", "http-status", fmt::format("{} from {}", res->status, provider.endpoint));
        }
        last_failure = res ? fmt::format("status {}", res->status) : httplib::to_string(res.error());
        if (attempt < provider.attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw Error("embedding", "provider-unreachable",
                fmt::format("{} after {} attempts ({})", provider.endpoint, provider.attempts, last_failure));
}

namespace {

EmbeddingMatrix assemble(const Corpus& corpus, const std::vector<const std::vector<double>*>& rows,
                         std::string tag) {
    const std::size_t dim = rows.empty() ? 0 : rows.front()->size();
    EmbeddingMatrix m;
    m.provider_tag = std::move(tag);
    m.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i]->size() != dim) {
            throw Error("embedding", "dimension-mismatch",
                        fmt::format("\"{}\" has length {}, expected {}", corpus.elements[i].id,
                                    rows[i]->size(), dim));
        }
        for (std::size_t c = 0; c < dim; ++c) {
            m.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = (*rows[i])[c];
        }
    }
    check_embedding_matrix(m, corpus.size());
    return m;
}

EmbeddingMatrix embed_from_file(const Corpus& corpus, const FileProvider& provider) {
    auto store = read_vector_store(provider.path);
    std::vector<const std::vector<double>*> rows;
    rows.reserve(corpus.size());
    for (const auto& e : corpus.elements) {
        auto it = store.find(e.id);
        if (it == store.end()) throw Error("embedding", "missing-vector", e.id);
        rows.push_back(&it->second);
    }
    return assemble(corpus, rows, "file:" + provider.path.filename().string());
}

EmbeddingMatrix embed_from_http(const Corpus& corpus, const HttpProvider& provider,
                                const std::optional<std::filesystem::path>& cache_path, EmbedStats& stats) {
    VectorStore cache;
    if (cache_path && std::filesystem::exists(*cache_path)) cache = read_vector_store(*cache_path);

    // unique texts missing from the cache, in first-appearance order
    std::vector<std::string> pending;
    std::unordered_map<std::string, std::size_t> pending_index;
    for (const auto& e : corpus.elements) {
        auto key = cache_key(provider.model, e.text);
        if (cache.count(key)) {
            ++stats.cache_hits;
        } else if (!pending_index.count(key)) {
            pending_index.emplace(key, pending.size());
            pending.push_back(e.text);
        }
    }

    const std::size_t batch = std::max<std::size_t>(provider.batch_size, 1);
    const std::size_t nbatches = (pending.size() + batch - 1) / batch;
    std::vector<std::vector<std::vector<double>>> results(nbatches);
    std::vector<std::exception_ptr> failures(nbatches);
    std::vector<std::size_t> request_counts(nbatches, 0);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t b = next++; b < nbatches; b = next++) {
            auto first = pending.begin() + static_cast<std::ptrdiff_t>(b * batch);
            auto last = pending.begin() + static_cast<std::ptrdiff_t>(std::min(pending.size(), (b + 1) * batch));
            try {
                results[b] = fetch_embeddings(provider, std::vector<std::string>(first, last), &request_counts[b]);
            } catch (...) {
                failures[b] = std::current_exception();
            }
        }
    };
    const std::size_t nthreads = std::min(std::max<std::size_t>(provider.parallelism, 1), nbatches);
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < nthreads; ++t) threads.emplace_back(worker);
    if (nbatches > 0) worker();
    for (auto& t : threads) t.join();

    for (auto n : request_counts) stats.requests += n;
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    // single writer: merge in batch order, then persist once
    for (std::size_t b = 0; b < nbatches; ++b) {
        for (std::size_t i = 0; i < results[b].size(); ++i) {
            cache[cache_key(provider.model, pending[b * batch + i])] = std::move(results[b][i]);
        }
    }
    stats.texts_fetched += pending.size();

    std::vector<const std::vector<double>*> rows;
    rows.reserve(corpus.size());
    for (const auto& e : corpus.elements) rows.push_back(&cache.at(cache_key(provider.model, e.text)));
    auto matrix = assemble(corpus, rows, "http:" + provider.model);

    if (cache_path && !pending.empty()) write_vector_store(*cache_path, cache);
    return matrix;
}

}  // namespace

EmbeddingMatrix embed_corpus(const Corpus& corpus, const EmbeddingProvider& provider,
                             const std::optional<std::filesystem::path>& cache_path, EmbedStats* stats) {
    EmbedStats local;
    EmbedStats& s = stats ? *stats : local;
    if (const auto* file = std::get_if<FileProvider>(&provider)) return embed_from_file(corpus, *file);
    return embed_from_http(corpus, std::get<HttpProvider>(provider), cache_path, s);
}

}  // namespace taxaudit
