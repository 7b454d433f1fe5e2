#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "taxaudit/corpus.hpp"

namespace taxaudit {

/// Label used for clusters (or categories) left without a partner by a rectangular match.
inline constexpr const char* kUnmatched = "unmatched";

/// Category x cluster counts.
struct ContingencyTable {
    std::vector<std::string> categories;   // rows
    Eigen::MatrixXi counts;                // |categories| x k

    int n_categories() const noexcept { return static_cast<int>(counts.rows()); }
    int n_clusters() const noexcept { return static_cast<int>(counts.cols()); }
    long total() const { return counts.cast<long>().sum(); }
    std::vector<long> row_sums() const;
};

/// counts(c, j) = number of elements with label c in cluster j.
ContingencyTable contingency(std::span<const int> labels, std::span<const int> assignments,
                             const std::vector<std::string>& categories, int k);

/// Cluster -> category mapping chosen by the assignment solver.
struct Matching {
    std::vector<int> cluster_to_category;   // -1 when the cluster is unmatched
    long matched = 0;                       // sum of the selected cells

    std::vector<int> category_to_cluster(int n_categories) const;
};

/// Hungarian solver for a square cost matrix (minimization). Returns the column chosen for
/// each row. Exposed for tests.
std::vector<int> solve_assignment(const std::vector<std::vector<long long>>& cost);

/// Mapping that maximizes the number of agreeing elements. Rectangular tables are padded
/// with zero rows/columns; among optimal mappings the lexicographically smallest
/// cluster -> category vector wins.
Matching optimal_match(const ContingencyTable& table);

struct Accuracy {
    long matched = 0;
    long total = 0;
    double value = 0.0;   // matched / total
};

Accuracy accuracy(const ContingencyTable& table, const Matching& mapping);

struct Mismatch {
    std::string id;
    std::string nominal;
    std::string mapped;

    bool operator==(const Mismatch&) const = default;
};

/// Elements whose cluster maps to a category other than their own, in corpus order.
std::vector<Mismatch> mismatch_list(const Corpus& corpus, std::span<const int> assignments,
                                    const Matching& mapping);

struct AlignmentResult {
    ContingencyTable table;
    Matching mapping;
    Accuracy accuracy;
    std::vector<Mismatch> mismatches;
};

AlignmentResult align(const Corpus& corpus, std::span<const int> assignments, int k);

/// k x p table; entry (j, c) is the mean of score column c over cluster j.
Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& scores, std::span<const int> assignments, int k);

/// Renumber clusters so that the cluster matched to category c gets index c. Unmatched
/// clusters follow in their original order. Returns old -> new index.
std::vector<int> canonical_cluster_order(const Matching& mapping, int n_categories);

}  // namespace taxaudit
