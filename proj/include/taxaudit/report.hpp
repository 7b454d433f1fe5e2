#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "taxaudit/align.hpp"

namespace taxaudit {

inline constexpr const char* kToolVersion = "0.1.0";

struct ComponentSummary {
    std::size_t pc = 0;          // 1-based position in the original fit
    double eigenvalue = 0.0;
    double share = 0.0;          // of total variance
    double eta_squared = 0.0;
    bool kept = false;
};

struct ElementRecord {
    std::string id;
    std::string category;
    int cluster = 0;             // 0-based, canonical order
    std::vector<double> scores;  // kept components, as clustered
};

/// Everything a report needs, self-contained so it can be re-rendered from its JSON form.
struct AnalysisBundle {
    std::string tool_version = kToolVersion;
    std::string corpus_name;
    std::size_t n = 0;
    std::vector<std::string> categories;

    std::string provider_tag;
    std::size_t dim = 0;

    bool standardized = false;
    std::vector<ComponentSummary> components;   // every extracted component

    int k = 0;
    int restarts = 0;
    int best_restart = 0;
    int iterations = 0;
    bool converged = false;
    double inertia = 0.0;

    ContingencyTable table;
    Matching mapping;
    Accuracy accuracy;
    std::vector<Mismatch> mismatches;
    Eigen::MatrixXd cluster_means;      // k x kept components
    std::vector<long> cluster_sizes;

    std::vector<ElementRecord> elements;
    std::vector<std::pair<std::string, std::string>> config;   // echoed run settings

    std::vector<std::size_t> kept_pcs() const;
};

/// Throws unless n, table, mapping, accuracy, and mismatches agree with each other.
void check_bundle(const AnalysisBundle& bundle);

enum class ReportFormat { Markdown, Json, CsvSet };

std::string render_markdown(const AnalysisBundle& bundle);
nlohmann::ordered_json bundle_to_json(const AnalysisBundle& bundle);
std::string render_json(const AnalysisBundle& bundle);
AnalysisBundle bundle_from_json(const nlohmann::ordered_json& j);

/// File suffix ("table2.csv", ...) -> content.
std::map<std::string, std::string> render_csv_set(const AnalysisBundle& bundle);

/// Rendered documents keyed by file suffix ("report.md", "report.json", "table3.csv", ...).
std::map<std::string, std::string> render(const AnalysisBundle& bundle, ReportFormat format);

/// Plot-ready CSV (id,x,y,cluster,category) for a pair of 1-based kept-component positions.
std::string scatter_data(const std::vector<ElementRecord>& elements, std::size_t n_components,
                         std::pair<std::size_t, std::size_t> components);

/// "82.4" for 0.8235...; one decimal, percent units.
std::string format_percent(double fraction);
/// Two decimals with negative zero printed as "0.00".
std::string format_mean(double value);

}  // namespace taxaudit
