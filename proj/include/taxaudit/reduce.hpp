#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "taxaudit/embedding.hpp"

namespace taxaudit {

/// Principal component model of a centered embedding matrix.
///
/// `components` holds one unit-length loading vector per row. `scores` are the centered
/// rows projected on those components. `source_index` remembers each kept component's
/// position in the original fit (0 = PC1) after screening.
struct PCModel {
    Eigen::VectorXd mean;          // d
    Eigen::MatrixXd components;    // p x d, orthonormal rows
    Eigen::VectorXd eigenvalues;   // p, non-increasing, sample variances (n-1 denominator)
    Eigen::MatrixXd scores;        // n x p
    double total_variance = 0.0;   // trace of the sample covariance
    bool standardized = false;
    std::vector<bool> zero_variance;   // per component; set by standardize_scores
    std::vector<std::size_t> source_index;

    std::size_t n_components() const noexcept { return static_cast<std::size_t>(components.rows()); }
    /// eigenvalue / total_variance per component.
    Eigen::VectorXd explained_share() const;
};

/// Largest admissible component count for an n x d matrix: min(n-1, d).
std::size_t max_components(std::size_t n, std::size_t d);

/// Thin SVD of the centered matrix; never forms the d x d covariance.
/// Each component's sign is fixed so its largest-magnitude loading is positive.
PCModel pca_fit(const Eigen::MatrixXd& matrix, std::size_t n_components);
inline PCModel pca_fit(const EmbeddingMatrix& matrix, std::size_t n_components) {
    return pca_fit(matrix.rows, n_components);
}

/// Score of an arbitrary row under the model (unstandardized).
Eigen::RowVectorXd project(const PCModel& model, const Eigen::RowVectorXd& row);

/// Divide every score column by its sample standard deviation. Columns whose variance
/// is numerically zero are set to 0 and flagged in `zero_variance`.
PCModel standardize_scores(const PCModel& model);

/// Between-group sum of squares over total sum of squares of one column. 0 when the
/// column has no variance.
double eta_squared(std::span<const double> values, std::span<const int> groups);

struct ComponentScreen {
    std::vector<double> eta_squared;   // per original component
    std::vector<bool> kept;
    double threshold = 0.0;
};

struct ScreenedModel {
    PCModel model;
    ComponentScreen screen;
};

/// Drop components whose eta-squared against `labels` is below `threshold`.
/// Kept components preserve their order.
ScreenedModel select_components(const PCModel& model, std::span<const int> labels, double threshold);

/// Sample standard deviation (n-1 denominator).
double sample_sd(std::span<const double> values);

}  // namespace taxaudit
