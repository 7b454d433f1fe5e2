#include "taxaudit/align.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "taxaudit/error.hpp"

namespace taxaudit {

std::vector<long> ContingencyTable::row_sums() const {
    std::vector<long> out(static_cast<std::size_t>(counts.rows()), 0);
    for (Eigen::Index r = 0; r < counts.rows(); ++r) out[static_cast<std::size_t>(r)] = counts.row(r).cast<long>().sum();
    return out;
}

ContingencyTable contingency(std::span<const int> labels, std::span<const int> assignments,
                             const std::vector<std::string>& categories, int k) {
    if (labels.size() != assignments.size()) {
        throw Error("align", "length-mismatch",
                    fmt::format("{} labels, {} assignments", labels.size(), assignments.size()));
    }
    if (k < 1) throw Error("align", "bad-k", fmt::format("k = {}", k));
    ContingencyTable t{categories, Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(categories.size()), k)};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int c = labels[i], j = assignments[i];
        if (c < 0 || c >= t.n_categories()) throw Error("align", "label-out-of-range", fmt::format("{}", c));
        if (j < 0 || j >= k) throw Error("align", "cluster-out-of-range", fmt::format("{}", j));
        ++t.counts(c, j);
    }
    return t;
}

std::vector<int> Matching::category_to_cluster(int n_categories) const {
    std::vector<int> out(static_cast<std::size_t>(n_categories), -1);
    for (std::size_t j = 0; j < cluster_to_category.size(); ++j) {
        int c = cluster_to_category[j];
        if (c >= 0 && c < n_categories) out[static_cast<std::size_t>(c)] = static_cast<int>(j);
    }
    return out;
}

std::vector<int> solve_assignment(const std::vector<std::vector<long long>>& cost) {
    const std::size_t n = cost.size();
    if (n == 0) return {};
    for (const auto& row : cost) {
        if (row.size() != n) throw Error("align", "non-square-cost", fmt::format("{} x {}", n, row.size()));
    }
    constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
    // potentials u (rows), v (columns); p[j] = row matched to column j; 1-based with 0 as sentinel
    std::vector<long long> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<long long> minv(n + 1, kInf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            long long delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
    return row_to_col;
}

namespace {

// Best total weight of a perfect matching of the free rows onto the free columns.
long long best_remaining(const std::vector<std::vector<long long>>& weight, const std::vector<bool>& row_free,
                         const std::vector<bool>& col_free) {
    std::vector<std::size_t> rows, cols;
    for (std::size_t i = 0; i < row_free.size(); ++i) {
        if (row_free[i]) rows.push_back(i);
        if (col_free[i]) cols.push_back(i);
    }
    if (rows.empty()) return 0;
    std::vector<std::vector<long long>> cost(rows.size(), std::vector<long long>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b) cost[a][b] = -weight[rows[a]][cols[b]];
    auto sol = solve_assignment(cost);
    long long total = 0;
    for (std::size_t a = 0; a < rows.size(); ++a) total += weight[rows[a]][cols[static_cast<std::size_t>(sol[a])]];
    return total;
}

}  // namespace

Matching optimal_match(const ContingencyTable& table) {
    const int ncat = table.n_categories();
    const int k = table.n_clusters();
    const auto m = static_cast<std::size_t>(std::max(ncat, k));

    // weight[cluster][category], zero-padded to square
    std::vector<std::vector<long long>> weight(m, std::vector<long long>(m, 0));
    for (int j = 0; j < k; ++j)
        for (int c = 0; c < ncat; ++c) weight[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] = table.counts(c, j);

    std::vector<bool> row_free(m, true), col_free(m, true);
    const long long optimum = best_remaining(weight, row_free, col_free);

    // Fix clusters one at a time to the smallest category that still admits the optimum.
    std::vector<int> chosen(m, -1);
    long long fixed_total = 0;
    for (std::size_t j = 0; j < m; ++j) {
        row_free[j] = false;
        for (std::size_t c = 0; c < m; ++c) {
            if (!col_free[c]) continue;
            col_free[c] = false;
            if (fixed_total + weight[j][c] + best_remaining(weight, row_free, col_free) == optimum) {
                chosen[j] = static_cast<int>(c);
                fixed_total += weight[j][c];
                break;
            }
            col_free[c] = true;
        }
    }

    Matching out;
    out.cluster_to_category.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        const int c = chosen[static_cast<std::size_t>(j)];
        out.cluster_to_category[static_cast<std::size_t>(j)] = c < ncat ? c : -1;
        if (c < ncat) out.matched += table.counts(c, j);
    }
    return out;
}

Accuracy accuracy(const ContingencyTable& table, const Matching& mapping) {
    if (mapping.cluster_to_category.size() != static_cast<std::size_t>(table.n_clusters())) {
        throw Error("align", "bad-mapping", "mapping size differs from cluster count");
    }
    Accuracy a;
    a.total = table.total();
    for (int j = 0; j < table.n_clusters(); ++j) {
        const int c = mapping.cluster_to_category[static_cast<std::size_t>(j)];
        if (c >= 0 && c < table.n_categories()) a.matched += table.counts(c, j);
    }
    a.value = a.total > 0 ? static_cast<double>(a.matched) / static_cast<double>(a.total) : 0.0;
    return a;
}

std::vector<Mismatch> mismatch_list(const Corpus& corpus, std::span<const int> assignments,
                                    const Matching& mapping) {
    if (assignments.size() != corpus.size()) {
        throw Error("align", "length-mismatch",
                    fmt::format("{} assignments for {} elements", assignments.size(), corpus.size()));
    }
    std::vector<Mismatch> out;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& e = corpus.elements[i];
        const int j = assignments[i];
        if (j < 0 || static_cast<std::size_t>(j) >= mapping.cluster_to_category.size()) {
            throw Error("align", "cluster-out-of-range", fmt::format("{}", j));
        }
        const int c = mapping.cluster_to_category[static_cast<std::size_t>(j)];
        std::string mapped = c >= 0 ? corpus.categories[static_cast<std::size_t>(c)] : kUnmatched;
        if (mapped != e.category) out.push_back({e.id, e.category, std::move(mapped)});
    }
    return out;
}

AlignmentResult align(const Corpus& corpus, std::span<const int> assignments, int k) {
    AlignmentResult r;
    auto labels = corpus.label_indices();
    r.table = contingency(labels, assignments, corpus.categories, k);
    r.mapping = optimal_match(r.table);
    r.accuracy = accuracy(r.table, r.mapping);
    r.mismatches = mismatch_list(corpus, assignments, r.mapping);
    return r;
}

Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& scores, std::span<const int> assignments, int k) {
    if (static_cast<std::size_t>(scores.rows()) != assignments.size()) {
        throw Error("align", "length-mismatch",
                    fmt::format("{} score rows, {} assignments", scores.rows(), assignments.size()));
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, scores.cols());
    std::vector<long> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        const int j = assignments[i];
        if (j < 0 || j >= k) throw Error("align", "cluster-out-of-range", fmt::format("{}", j));
        sums.row(j) += scores.row(static_cast<Eigen::Index>(i));
        ++counts[static_cast<std::size_t>(j)];
    }
    for (int j = 0; j < k; ++j) {
        if (counts[static_cast<std::size_t>(j)] == 0) throw Error("align", "empty-cluster", fmt::format("cluster {}", j + 1));
        sums.row(j) /= static_cast<double>(counts[static_cast<std::size_t>(j)]);
    }
    return sums;
}

std::vector<int> canonical_cluster_order(const Matching& mapping, int n_categories) {
    const auto k = mapping.cluster_to_category.size();
    std::vector<int> clusters(k);
    std::iota(clusters.begin(), clusters.end(), 0);
    auto key = [&](int j) {
        int c = mapping.cluster_to_category[static_cast<std::size_t>(j)];
        return c >= 0 ? c : n_categories + j;
    };
    std::stable_sort(clusters.begin(), clusters.end(), [&](int a, int b) { return key(a) < key(b); });
    std::vector<int> old_to_new(k);
    for (std::size_t pos = 0; pos < k; ++pos) old_to_new[static_cast<std::size_t>(clusters[pos])] = static_cast<int>(pos);
    return old_to_new;
}

}  // namespace taxaudit
