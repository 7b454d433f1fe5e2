#include "taxaudit/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "taxaudit/error.hpp"
#include "taxaudit/kernels.hpp"

namespace taxaudit {

namespace {

// Eigenvalues below this fraction of the largest are treated as exactly zero.
constexpr double kRelativeZeroVariance = 1e-12;

void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> loading) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < loading.size(); ++i) {
        double a = std::abs(loading(i));
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    if (loading(best) < 0) loading = -loading;
}

}  // namespace

Eigen::VectorXd PCModel::explained_share() const {
    if (total_variance <= 0) return Eigen::VectorXd::Zero(eigenvalues.size());
    return eigenvalues / total_variance;
}

std::size_t max_components(std::size_t n, std::size_t d) {
    return n == 0 ? 0 : std::min(n - 1, d);
}

PCModel pca_fit(const Eigen::MatrixXd& matrix, std::size_t n_components) {
    const auto n = static_cast<std::size_t>(matrix.rows());
    const auto d = static_cast<std::size_t>(matrix.cols());
    if (n < 2) throw Error("reduce", "too-few-rows", fmt::format("{} rows, need at least 2", n));
    if (!matrix.allFinite()) throw Error("reduce", "non-finite-input");
    const std::size_t bound = max_components(n, d);
    if (n_components == 0 || n_components > bound) {
        throw Error("reduce", "too-many-components",
                    fmt::format("requested {} components, bound is min(n-1, d) = {}", n_components, bound));
    }

    PCModel model;
    model.mean = kernels::omp::column_means(matrix);
    Eigen::MatrixXd centered = matrix.rowwise() - model.mean.transpose();
    model.total_variance = centered.squaredNorm() / static_cast<double>(n - 1);
    if (model.total_variance <= 0.0) throw Error("reduce", "zero-variance", "all rows are identical");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const auto p = static_cast<Eigen::Index>(n_components);
    Eigen::MatrixXd loadings = svd.matrixV().leftCols(p);
    for (Eigen::Index c = 0; c < p; ++c) canonicalize_sign(loadings.col(c));

    model.components = loadings.transpose();
    model.scores = centered * loadings;
    model.eigenvalues = svd.singularValues().head(p).array().square() / static_cast<double>(n - 1);
    for (Eigen::Index c = 0; c < p; ++c) model.eigenvalues(c) = std::max(model.eigenvalues(c), 0.0);
    model.zero_variance.assign(n_components, false);
    model.source_index.resize(n_components);
    std::iota(model.source_index.begin(), model.source_index.end(), std::size_t{0});
    return model;
}

Eigen::RowVectorXd project(const PCModel& model, const Eigen::RowVectorXd& row) {
    if (row.size() != model.mean.size()) {
        throw Error("reduce", "dimension-mismatch",
                    fmt::format("row has {} entries, model expects {}", row.size(), model.mean.size()));
    }
    return (row - model.mean.transpose()) * model.components.transpose();
}

double sample_sd(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

PCModel standardize_scores(const PCModel& model) {
    if (model.standardized) throw Error("reduce", "already-standardized");
    PCModel out = model;
    const double largest = model.eigenvalues.size() ? model.eigenvalues.maxCoeff() : 0.0;
    out.zero_variance.assign(model.n_components(), false);
    for (Eigen::Index c = 0; c < out.scores.cols(); ++c) {
        Eigen::VectorXd col = out.scores.col(c);
        double sd = sample_sd(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
        if (sd == 0.0 || model.eigenvalues(c) <= kRelativeZeroVariance * largest) {
            out.scores.col(c).setZero();
            out.zero_variance[static_cast<std::size_t>(c)] = true;
        } else {
            out.scores.col(c) /= sd;
        }
    }
    out.standardized = true;
    return out;
}

double eta_squared(std::span<const double> values, std::span<const int> groups) {
    if (values.size() != groups.size()) {
        throw Error("reduce", "label-count-mismatch",
                    fmt::format("{} values, {} labels", values.size(), groups.size()));
    }
    if (values.empty()) return 0.0;
    const double grand = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());

    std::map<int, std::pair<double, std::size_t>> sums;
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto& [sum, count] = sums[groups[i]];
        sum += values[i];
        ++count;
        total += (values[i] - grand) * (values[i] - grand);
    }
    if (total <= 0.0) return 0.0;
    double between = 0.0;
    for (const auto& [group, sc] : sums) {
        double m = sc.first / static_cast<double>(sc.second);
        between += static_cast<double>(sc.second) * (m - grand) * (m - grand);
    }
    return std::clamp(between / total, 0.0, 1.0);
}

ScreenedModel select_components(const PCModel& model, std::span<const int> labels, double threshold) {
    if (labels.size() != static_cast<std::size_t>(model.scores.rows())) {
        throw Error("reduce", "label-count-mismatch",
                    fmt::format("{} labels for {} score rows", labels.size(), model.scores.rows()));
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw Error("reduce", "bad-threshold", fmt::format("{} is outside [0, 1]", threshold));
    }

    ScreenedModel out;
    out.screen.threshold = threshold;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < model.scores.cols(); ++c) {
        Eigen::VectorXd col = model.scores.col(c);
        double e2 = eta_squared(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), labels);
        out.screen.eta_squared.push_back(e2);
        bool kept = e2 >= threshold;
        out.screen.kept.push_back(kept);
        if (kept) keep.push_back(c);
    }
    if (keep.empty()) {
        throw Error("reduce", "all-components-dropped",
                    fmt::format("eta-squared threshold {} removed every component; lower the threshold", threshold));
    }

    PCModel& m = out.model;
    const auto kept = static_cast<Eigen::Index>(keep.size());
    m.mean = model.mean;
    m.total_variance = model.total_variance;
    m.standardized = model.standardized;
    m.components.resize(kept, model.components.cols());
    m.eigenvalues.resize(kept);
    m.scores.resize(model.scores.rows(), kept);
    for (Eigen::Index i = 0; i < kept; ++i) {
        auto src = keep[static_cast<std::size_t>(i)];
        m.components.row(i) = model.components.row(src);
        m.eigenvalues(i) = model.eigenvalues(src);
        m.scores.col(i) = model.scores.col(src);
        m.zero_variance.push_back(model.zero_variance.empty() ? false
                                                              : model.zero_variance[static_cast<std::size_t>(src)]);
        m.source_index.push_back(model.source_index.empty() ? static_cast<std::size_t>(src)
                                                            : model.source_index[static_cast<std::size_t>(src)]);
    }
    return out;
}

}  // namespace taxaudit
