// Regenerates the shipped fixture vector stores.
//
// The fixture texts are reconstructions of the public CCSS grade 4 standards and NAEP grade 4
// item specifications. Their vectors are synthetic: each element sits in a planted cluster so
// that the default pipeline reproduces the published cross-classification counts.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "taxaudit/corpus.hpp"
#include "taxaudit/embedding.hpp"
#include "taxaudit/error.hpp"
#include "taxaudit/synthetic.hpp"

namespace fs = std::filesystem;
using namespace taxaudit;

namespace {

// element id -> category whose cluster it is planted in
const std::map<std::string, std::string> kCcssOverrides{
    {"4.OA.B.4", "Number and Operations in Base 10"},
    {"4.NF.B.4c", "Operations and Algebraic Thinking"},
    {"4.NF.C.7", "Number and Operations in Base 10"},
    {"4.MD.A.1", "Operations and Algebraic Thinking"},
    {"4.MD.A.2", "Operations and Algebraic Thinking"},
    {"4.MD.B.4", "Number and Operations—Fractions"},
};

const std::map<std::string, std::string> kNaepOverrides{
    {"4.Measuring Physical Attributes(f)", "Geometry"},
    {"4.Measuring Physical Attributes(g)", "Geometry"},
    {"4.Patterns, Relations, and Functions (a)", "Geometry"},
    {"4.Patterns, Relations, and Functions (d)", "Data Analysis, Statistics, and Probability"},
};

void build(const fs::path& corpus_path, const fs::path& out_path, const std::map<std::string, std::string>& overrides,
           std::uint64_t seed) {
    auto corpus = load_corpus(corpus_path, CorpusFormat::Csv);
    synthetic::PlantedSpec spec;
    spec.seed = seed;
    auto targets = synthetic::targets_with_overrides(corpus, overrides);
    auto rows = synthetic::planted_embeddings(corpus.label_indices(), targets,
                                              static_cast<int>(corpus.categories.size()), spec);
    write_vector_store(out_path, synthetic::to_store(corpus, rows));
    std::cout << "wrote " << out_path.string() << " (" << rows.rows() << " x " << rows.cols() << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regenerate fixture vector stores"};
    std::string in_dir = "fixtures", out_dir = "fixtures";
    app.add_option("--in", in_dir, "Directory holding ccss.csv and naep.csv");
    app.add_option("--out", out_dir, "Directory for the *_vectors.jsonl files");
    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(out_dir);
        build(fs::path(in_dir) / "ccss.csv", fs::path(out_dir) / "ccss_vectors.jsonl", kCcssOverrides, 2024);
        build(fs::path(in_dir) / "naep.csv", fs::path(out_dir) / "naep_vectors.jsonl", kNaepOverrides, 2025);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
