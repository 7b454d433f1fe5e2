#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace taxaudit {

/// A single labeled text unit: one content standard or one item specification.
struct Element {
    std::string id;
    std::string category;
    std::string text;

    bool operator==(const Element&) const = default;
};

/// Ordered elements plus the category vocabulary used for row order in every table.
struct Corpus {
    std::vector<Element> elements;
    std::vector<std::string> categories;

    std::size_t size() const noexcept { return elements.size(); }

    /// Index of `category` in `categories`, or nullopt.
    std::optional<std::size_t> category_index(std::string_view category) const;

    /// Per-element category indices, in element order. Throws if a category is unknown.
    std::vector<int> label_indices() const;

    bool operator==(const Corpus&) const = default;
};

enum class CorpusFormat { Csv, Jsonl };

CorpusFormat parse_corpus_format(std::string_view name);
/// Picks the format from the file extension (".jsonl"/".json" -> Jsonl, otherwise Csv).
CorpusFormat corpus_format_for(const std::filesystem::path& path);

/// Trim surrounding whitespace and collapse internal whitespace runs to a single space.
std::string normalize_text(std::string_view text);

/// Builds a corpus from already-parsed elements, applying normalization and invariants.
/// With `category_order` the vocabulary is exactly that list; otherwise first-appearance order.
Corpus make_corpus(std::vector<Element> elements,
                   const std::optional<std::vector<std::string>>& category_order = std::nullopt);

/// Load a corpus from CSV (header `id,category,text`, RFC-4180 quoting) or JSONL.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const std::optional<std::vector<std::string>>& category_order = std::nullopt);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format);

std::string corpus_to_csv(const Corpus& corpus);
std::string corpus_to_jsonl(const Corpus& corpus);

struct Diagnostic {
    enum class Kind {
        EmptyId,
        DuplicateId,
        EmptyCategory,
        UnknownCategory,
        DuplicateCategory,
        BlankText,
        TooFewCategories,
    };
    Kind kind;
    std::string subject;  // offending id or category, empty for corpus-level issues

    bool operator==(const Diagnostic&) const = default;
};

std::string_view to_string(Diagnostic::Kind kind);
std::string to_string(const Diagnostic& d);

/// One diagnostic per violated corpus invariant; empty when the corpus is valid.
std::vector<Diagnostic> validate_corpus(const Corpus& corpus);

/// Minimal RFC-4180 reader. Each record carries the 1-based line number where it starts.
struct CsvRecord {
    std::size_t line = 0;
    std::vector<std::string> fields;
};
std::vector<CsvRecord> parse_csv(std::string_view content);
std::string csv_escape(std::string_view field);

}  // namespace taxaudit
