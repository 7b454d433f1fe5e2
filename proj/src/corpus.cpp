#include "taxaudit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "taxaudit/error.hpp"

namespace taxaudit {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("corpus", "unreadable-file", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void strip_bom(std::string& s) {
    if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF &&
        static_cast<unsigned char>(s[1]) == 0xBB && static_cast<unsigned char>(s[2]) == 0xBF) {
        s.erase(0, 3);
    }
}

Error parse_error(std::size_t line, const std::string& what) {
    return Error("corpus", "parse-error", fmt::format("line {}: {}", line, what));
}

void require_fields(const Element& e, std::size_t line) {
    if (e.id.empty()) throw parse_error(line, "missing field \"id\"");
    if (e.category.empty()) throw parse_error(line, "missing field \"category\"");
    if (e.text.empty()) throw parse_error(line, "missing field \"text\"");
}

std::vector<Element> read_csv_elements(const std::string& content) {
    auto records = parse_csv(content);
    if (records.empty()) throw Error("corpus", "empty corpus", "no header");
    const auto& header = records.front();
    std::vector<std::string> names;
    for (const auto& f : header.fields) names.push_back(trim(f));
    if (names != std::vector<std::string>{"id", "category", "text"}) {
        throw parse_error(header.line, "header must be id,category,text");
    }
    std::vector<Element> out;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() == 1 && trim(rec.fields[0]).empty()) continue;  // blank line
        if (rec.fields.size() != 3) {
            throw parse_error(rec.line, fmt::format("expected 3 fields, got {}", rec.fields.size()));
        }
        Element e{trim(rec.fields[0]), trim(rec.fields[1]), normalize_text(rec.fields[2])};
        require_fields(e, rec.line);
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<Element> read_jsonl_elements(const std::string& content) {
    std::vector<Element> out;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& ex) {
            throw parse_error(lineno, "invalid JSON");
        }
        if (!j.is_object()) throw parse_error(lineno, "expected a JSON object");
        Element e;
        for (auto [key, dest] : {std::pair{"id", &e.id}, std::pair{"category", &e.category},
                                 std::pair{"text", &e.text}}) {
            auto it = j.find(key);
            if (it == j.end()) throw parse_error(lineno, fmt::format("missing field \"{}\"", key));
            if (!it->is_string()) throw parse_error(lineno, fmt::format("field \"{}\" is not a string", key));
            *dest = it->get<std::string>();
        }
        e.id = trim(e.id);
        e.category = trim(e.category);
        e.text = normalize_text(e.text);
        require_fields(e, lineno);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

std::optional<std::size_t> Corpus::category_index(std::string_view category) const {
    auto it = std::find(categories.begin(), categories.end(), category);
    if (it == categories.end()) return std::nullopt;
    return static_cast<std::size_t>(it - categories.begin());
}

std::vector<int> Corpus::label_indices() const {
    std::vector<int> labels;
    labels.reserve(elements.size());
    for (const auto& e : elements) {
        auto idx = category_index(e.category);
        if (!idx) throw Error("corpus", "unknown-category", e.category);
        labels.push_back(static_cast<int>(*idx));
    }
    return labels;
}

CorpusFormat parse_corpus_format(std::string_view name) {
    if (name == "csv") return CorpusFormat::Csv;
    if (name == "jsonl") return CorpusFormat::Jsonl;
    throw Error("corpus", "unknown-format", std::string(name));
}

CorpusFormat corpus_format_for(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return (ext == ".jsonl" || ext == ".json") ? CorpusFormat::Jsonl : CorpusFormat::Csv;
}

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

Corpus make_corpus(std::vector<Element> elements,
                   const std::optional<std::vector<std::string>>& category_order) {
    if (elements.empty()) throw Error("corpus", "empty corpus");

    Corpus corpus;
    std::unordered_set<std::string> seen_ids;
    for (auto& e : elements) {
        e.id = trim(e.id);
        e.category = trim(e.category);
        e.text = normalize_text(e.text);
        if (e.id.empty()) throw Error("corpus", "empty-id");
        if (e.category.empty()) throw Error("corpus", "empty-category", e.id);
        if (e.text.empty()) throw Error("corpus", "blank-text", e.id);
        if (!seen_ids.insert(e.id).second) throw Error("corpus", "duplicate-id", e.id);
    }

    if (category_order) {
        std::unordered_set<std::string> seen;
        for (const auto& raw : *category_order) {
            auto c = trim(raw);
            if (c.empty()) throw Error("corpus", "empty-category", "in explicit category order");
            if (!seen.insert(c).second) throw Error("corpus", "duplicate-category", c);
            corpus.categories.push_back(std::move(c));
        }
        for (const auto& e : elements) {
            if (!seen.count(e.category)) throw Error("corpus", "unknown-category", e.category);
        }
    } else {
        std::unordered_set<std::string> seen;
        for (const auto& e : elements) {
            if (seen.insert(e.category).second) corpus.categories.push_back(e.category);
        }
    }
    if (corpus.categories.size() < 2) {
        throw Error("corpus", "too-few-categories",
                    fmt::format("{} category found, need at least 2", corpus.categories.size()));
    }
    corpus.elements = std::move(elements);
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const std::optional<std::vector<std::string>>& category_order) {
    if (!std::filesystem::exists(path)) throw Error("corpus", "missing-file", path.string());
    auto content = read_file(path);
    strip_bom(content);
    auto elements = format == CorpusFormat::Csv ? read_csv_elements(content) : read_jsonl_elements(content);
    if (elements.empty()) throw Error("corpus", "empty corpus", path.string());
    return make_corpus(std::move(elements), category_order);
}

std::string csv_escape(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                        (!field.empty() && (is_space(field.front()) || is_space(field.back())));
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string corpus_to_csv(const Corpus& corpus) {
    std::string out = "id,category,text\n";
    for (const auto& e : corpus.elements) {
        out += csv_escape(e.id) + ',' + csv_escape(e.category) + ',' + csv_escape(e.text) + '\n';
    }
    return out;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
    std::string out;
    for (const auto& e : corpus.elements) {
        nlohmann::ordered_json j;
        j["id"] = e.id;
        j["category"] = e.category;
        j["text"] = e.text;
        out += j.dump() + '\n';
    }
    return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("corpus", "unwritable-file", path.string());
    out << (format == CorpusFormat::Csv ? corpus_to_csv(corpus) : corpus_to_jsonl(corpus));
}

std::string_view to_string(Diagnostic::Kind kind) {
    switch (kind) {
        case Diagnostic::Kind::EmptyId: return "empty-id";
        case Diagnostic::Kind::DuplicateId: return "duplicate-id";
        case Diagnostic::Kind::EmptyCategory: return "empty-category";
        case Diagnostic::Kind::UnknownCategory: return "unknown-category";
        case Diagnostic::Kind::DuplicateCategory: return "duplicate-category";
        case Diagnostic::Kind::BlankText: return "blank-text";
        case Diagnostic::Kind::TooFewCategories: return "too-few-categories";
    }
    return "unknown";
}

std::string to_string(const Diagnostic& d) {
    if (d.subject.empty()) return std::string(to_string(d.kind));
    return fmt::format("{} \"{}\"", to_string(d.kind), d.subject);
}

std::vector<Diagnostic> validate_corpus(const Corpus& corpus) {
    using K = Diagnostic::Kind;
    std::vector<Diagnostic> out;

    std::unordered_set<std::string> cats;
    for (const auto& c : corpus.categories) {
        if (c.empty()) out.push_back({K::EmptyCategory, ""});
        else if (!cats.insert(c).second) out.push_back({K::DuplicateCategory, c});
    }
    if (cats.size() < 2) out.push_back({K::TooFewCategories, ""});

    std::unordered_set<std::string> ids, reported;
    for (const auto& e : corpus.elements) {
        if (e.id.empty()) {
            out.push_back({K::EmptyId, ""});
        } else if (!ids.insert(e.id).second && reported.insert(e.id).second) {
            out.push_back({K::DuplicateId, e.id});
        }
        if (e.category.empty()) out.push_back({K::EmptyCategory, e.id});
        else if (!cats.count(e.category)) out.push_back({K::UnknownCategory, e.category});
        if (trim(e.text).empty()) out.push_back({K::BlankText, e.id});
    }
    return out;
}

std::vector<CsvRecord> parse_csv(std::string_view content) {
    std::vector<CsvRecord> records;
    CsvRecord current;
    std::string field;
    std::size_t line = 1;
    std::size_t i = 0;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool record_open = false;

    auto finish_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto finish_record = [&] {
        finish_field();
        records.push_back(std::move(current));
        current = CsvRecord{};
        record_open = false;
    };

    for (; i < content.size(); ++i) {
        char c = content[i];
        if (!record_open) {
            current.line = line;
            record_open = true;
        }
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_was_quoted) {
                    throw parse_error(line, "unexpected quote inside field");
                }
                in_quotes = true;
                field_was_quoted = true;
                break;
            case ',':
                finish_field();
                break;
            case '\r':
                if (i + 1 < content.size() && content[i + 1] == '\n') break;
                [[fallthrough]];
            case '\n':
                finish_record();
                ++line;
                break;
            default:
                if (field_was_quoted) throw parse_error(line, "text after closing quote");
                field.push_back(c);
        }
    }
    if (in_quotes) throw parse_error(current.line, "unterminated quoted field");
    if (record_open) finish_record();
    return records;
}

}  // namespace taxaudit
