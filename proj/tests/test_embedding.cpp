#include <atomic>
#include <bit>
#include <cstdlib>
#include <random>
#include <thread>

// Eigen first: httplib pulls in <resolv.h>, whose `_res` macro breaks Eigen's headers.
#include "helpers.hpp"
#include "taxaudit/embedding.hpp"

#include <httplib.h>
#include <json.hpp>

using namespace taxaudit;
using testing_support::temp_dir;
using testing_support::write_file;

namespace {

const std::filesystem::path kFixtures = TAXAUDIT_FIXTURES;

/// Local embeddings endpoint. Each text maps to a fixed length-8 vector derived from its bytes.
class MockEndpoint {
public:
    std::atomic<int> hits{0};
    std::atomic<int> fail_first{0};    // respond 500 to this many requests first
    std::atomic<int> status_override{0};
    std::string last_auth;

    MockEndpoint() {
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            last_auth = req.get_header_value("Authorization");
            if (status_override) {
                res.status = status_override;
                return;
            }
            if (fail_first > 0) {
                --fail_first;
                res.status = 500;
                return;
            }
            auto body = nlohmann::json::parse(req.body);
            nlohmann::json data = nlohmann::json::array();
            const auto& input = body["input"];
            // reversed order: the client must place vectors by index, not by position
            for (std::size_t i = input.size(); i-- > 0;) {
                data.push_back({{"index", i}, {"embedding", vector_for(input[i].get<std::string>())}});
            }
            res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockEndpoint() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/embeddings"; }

    static std::vector<double> vector_for(const std::string& text) {
        std::vector<double> v(8, 0.0);
        for (std::size_t i = 0; i < text.size(); ++i) v[i % 8] += static_cast<unsigned char>(text[i]) / 100.0;
        v[0] += static_cast<double>(text.size());
        return v;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

Corpus three() {
    return make_corpus({{"a", "X", "first text"}, {"b", "Y", "second text"}, {"c", "X", "third, longer text"}});
}

HttpProvider provider_for(const MockEndpoint& m) {
    HttpProvider p;
    p.endpoint = m.url();
    p.model = "mock-model";
    p.initial_backoff = std::chrono::milliseconds(1);
    p.timeout = std::chrono::milliseconds(5000);
    return p;
}

}  // namespace

TEST(VectorStore, SmallRoundTrip) {
    auto dir = temp_dir("store-small");
    VectorStore s{{"a", {1, 2}}, {"b", {3, 4}}};
    write_vector_store(dir / "s.jsonl", s);
    EXPECT_EQ(read_vector_store(dir / "s.jsonl"), s);
}

TEST(VectorStore, RandomRoundTripIsBitExact) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    VectorStore s;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> v(16);
        for (auto& x : v) x = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
        s["id-" + std::to_string(i)] = v;
    }
    auto dir = temp_dir("store-random");
    write_vector_store(dir / "r.jsonl", s);
    auto back = read_vector_store(dir / "r.jsonl");
    ASSERT_EQ(back.size(), s.size());
    for (const auto& [id, v] : s) {
        const auto& w = back.at(id);
        ASSERT_EQ(w.size(), v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            ASSERT_EQ(std::bit_cast<std::uint64_t>(w[i]), std::bit_cast<std::uint64_t>(v[i])) << id;
        }
    }
}

TEST(VectorStore, MissingVectorKeyNamesLine) {
    try {
        parse_vector_store("{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\"b\"}\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "malformed-vector-store");
        EXPECT_NE(e.detail().find("line 2"), std::string::npos) << e.what();
    }
}

TEST(VectorStore, RaggedRowsRejected) {
    EXPECT_TAXAUDIT_ERROR(parse_vector_store("{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\"b\",\"vector\":[1]}\n"),
                          "embedding", "dimension-mismatch");
}

TEST(FileProvider, FixtureShape) {
    auto c = load_corpus(kFixtures / "ccss.csv", CorpusFormat::Csv);
    auto m = embed_corpus(c, FileProvider{kFixtures / "ccss_vectors.jsonl"});
    EXPECT_EQ(m.size(), 34u);
    EXPECT_EQ(m.dim(), 3000u);
    EXPECT_EQ(m.provider_tag, "file:ccss_vectors.jsonl");
}

TEST(FileProvider, MissingIdNamed) {
    auto c = load_corpus(kFixtures / "ccss.csv", CorpusFormat::Csv);
    auto store = read_vector_store(kFixtures / "ccss_vectors.jsonl");
    store.erase("4.G.A.1");
    auto dir = temp_dir("file-missing");
    write_vector_store(dir / "v.jsonl", store);
    try {
        embed_corpus(c, FileProvider{dir / "v.jsonl"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(std::string(e.what()), "embedding: missing-vector: 4.G.A.1");
    }
}

TEST(FileProvider, MissingStore) {
    EXPECT_TAXAUDIT_ERROR(embed_corpus(three(), FileProvider{"/nonexistent/v.jsonl"}), "embedding",
                          "missing-vector-store");
}

TEST(FileProvider, RowsFollowCorpusOrder) {
    auto dir = temp_dir("file-order");
    write_vector_store(dir / "v.jsonl", {{"c", {5, 6}}, {"a", {1, 2}}, {"b", {3, 4}}});
    auto m = embed_corpus(three(), FileProvider{dir / "v.jsonl"});
    EXPECT_EQ(m.rows(0, 0), 1);
    EXPECT_EQ(m.rows(1, 0), 3);
    EXPECT_EQ(m.rows(2, 0), 5);
}

TEST(HttpProvider, WarmCacheMakesNoRequests) {
    MockEndpoint mock;
    auto dir = temp_dir("http-cache");
    auto provider = provider_for(mock);
    EmbedStats first;
    auto m1 = embed_corpus(three(), provider, dir / "cache.jsonl", &first);
    ASSERT_EQ(m1.size(), 3u);
    ASSERT_EQ(m1.dim(), 8u);
    EXPECT_EQ(m1.provider_tag, "http:mock-model");
    EXPECT_EQ(mock.hits.load(), 1);
    for (std::size_t i = 0; i < 3; ++i) {
        auto expected = MockEndpoint::vector_for(three().elements[i].text);
        for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(m1.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)), expected[c]);
    }

    EmbedStats second;
    auto m2 = embed_corpus(three(), provider, dir / "cache.jsonl", &second);
    EXPECT_EQ(mock.hits.load(), 1);
    EXPECT_EQ(second.requests, 0u);
    EXPECT_EQ(second.cache_hits, 3u);
    EXPECT_EQ(m1.rows, m2.rows);
}

TEST(HttpProvider, BatchesAndDeduplicates) {
    MockEndpoint mock;
    auto provider = provider_for(mock);
    provider.batch_size = 2;
    std::vector<Element> elements;
    for (int i = 0; i < 7; ++i) elements.push_back({"e" + std::to_string(i), i % 2 ? "A" : "B", "text " + std::to_string(i % 5)});
    EmbedStats stats;
    auto m = embed_corpus(make_corpus(elements), provider, std::nullopt, &stats);
    EXPECT_EQ(stats.texts_fetched, 5u);
    EXPECT_EQ(stats.requests, 3u);
    EXPECT_EQ(mock.hits.load(), 3);
    EXPECT_EQ(m.rows.row(0), m.rows.row(5));
}

TEST(HttpProvider, RetriesServerErrors) {
    MockEndpoint mock;
    mock.fail_first = 2;
    EmbedStats stats;
    auto m = embed_corpus(three(), provider_for(mock), std::nullopt, &stats);
    EXPECT_EQ(m.size(), 3u);
    EXPECT_EQ(stats.requests, 3u);
}

TEST(HttpProvider, GivesUpAfterAttemptBudget) {
    MockEndpoint mock;
    mock.fail_first = 10;
    EXPECT_TAXAUDIT_ERROR(embed_corpus(three(), provider_for(mock)), "embedding", "provider-unreachable");
    EXPECT_EQ(mock.hits.load(), 3);
}

TEST(HttpProvider, ClientErrorsAreNotRetried) {
    MockEndpoint mock;
    mock.status_override = 401;
    EXPECT_TAXAUDIT_ERROR(embed_corpus(three(), provider_for(mock)), "embedding", "http-status");
    EXPECT_EQ(mock.hits.load(), 1);
}

TEST(HttpProvider, UnreachableEndpoint) {
    HttpProvider p;
    p.endpoint = "http://127.0.0.1:1/v1/embeddings";
    p.model = "m";
    p.initial_backoff = std::chrono::milliseconds(1);
    p.timeout = std::chrono::milliseconds(500);
    EXPECT_TAXAUDIT_ERROR(embed_corpus(three(), p), "embedding", "provider-unreachable");
}

TEST(HttpProvider, SendsBearerToken) {
    MockEndpoint mock;
    auto provider = provider_for(mock);
    provider.token_env = "TAXAUDIT_TEST_TOKEN";
    ::setenv("TAXAUDIT_TEST_TOKEN", "secret", 1);
    embed_corpus(three(), provider);
    ::unsetenv("TAXAUDIT_TEST_TOKEN");
    EXPECT_EQ(mock.last_auth, "Bearer secret");
}

TEST(HttpProvider, CacheKeyDependsOnModelAndText) {
    EXPECT_NE(cache_key("m1", "t"), cache_key("m2", "t"));
    EXPECT_NE(cache_key("m1", "t"), cache_key("m1", "u"));
    EXPECT_EQ(cache_key("m1", "t"), cache_key("m1", "t"));
}
