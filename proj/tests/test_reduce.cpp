#include <cmath>
#include <random>

#include "helpers.hpp"
#include "taxaudit/reduce.hpp"

using namespace taxaudit;
using testing_support::column;
using testing_support::random_matrix;
using testing_support::to_rows;

TEST(Pca, CollinearRows) {
    Eigen::MatrixXd x(3, 2);
    x << 1, 1, 2, 2, 3, 3;
    auto m = pca_fit(x, 1);
    EXPECT_NEAR(m.components(0, 0), 1 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(m.components(0, 1), 1 / std::sqrt(2.0), 1e-12);
    // projections {-sqrt2, 0, sqrt2}: squared sum 4 over n-1 = 2
    EXPECT_NEAR(m.eigenvalues(0), 2.0, 1e-12);
    EXPECT_NEAR(m.scores(0, 0), -std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(m.scores(1, 0), 0.0, 1e-12);
    EXPECT_NEAR(m.scores(2, 0), std::sqrt(2.0), 1e-12);
    EXPECT_FALSE(m.standardized);
}

TEST(Pca, EigenvaluesMatchPowerIterationOracle) {
    std::mt19937_64 gen(3);
    auto x = random_matrix(gen, 6, 4);
    auto m = pca_fit(x, 3);
    auto expected = oracle::power_eigenvalues(oracle::sample_covariance(to_rows(x)), 3);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(m.eigenvalues(i), expected[static_cast<std::size_t>(i)], 1e-6);
}

TEST(Pca, RankBoundIsStated) {
    std::mt19937_64 gen(4);
    auto x = random_matrix(gen, 5, 10);
    try {
        pca_fit(x, 5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "too-many-components");
        EXPECT_NE(e.detail().find("4"), std::string::npos) << e.what();
    }
    EXPECT_EQ(max_components(5, 10), 4u);
    EXPECT_EQ(max_components(34, 3000), 33u);
    EXPECT_EQ(max_components(10, 3), 3u);
}

TEST(Pca, IdenticalRowsRejected) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 3);
    EXPECT_TAXAUDIT_ERROR(pca_fit(x, 1), "reduce", "zero-variance");
}

TEST(Pca, ReconstructionAtFullRank) {
    std::mt19937_64 gen(8);
    auto x = random_matrix(gen, 7, 12);
    auto m = pca_fit(x, 6);
    Eigen::MatrixXd back = (m.scores * m.components).rowwise() + m.mean.transpose();
    EXPECT_LT((back - x).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Pca, MeanProjectsToZero) {
    std::mt19937_64 gen(9);
    auto x = random_matrix(gen, 9, 5);
    auto m = pca_fit(x, 3);
    EXPECT_LT(project(m, m.mean.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((project(m, x.row(2)) - m.scores.row(2)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pca, SignRuleAndDeterminism) {
    std::mt19937_64 gen(10);
    auto x = random_matrix(gen, 12, 30);
    auto a = pca_fit(x, 4);
    auto b = pca_fit(x, 4);
    EXPECT_EQ(a.components, b.components);
    EXPECT_EQ(a.scores, b.scores);
    for (Eigen::Index r = 0; r < a.components.rows(); ++r) {
        Eigen::Index idx = 0;
        a.components.row(r).cwiseAbs().maxCoeff(&idx);
        EXPECT_GT(a.components(r, idx), 0.0);
    }
    // negating the data flips every direction; the rule restores the signs
    auto c = pca_fit(Eigen::MatrixXd(-x), 4);
    EXPECT_LT((c.components - a.components).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pca, OrthonormalAndUncorrelated) {
    std::mt19937_64 gen(12);
    auto x = random_matrix(gen, 15, 40);
    auto m = pca_fit(x, 5);
    Eigen::MatrixXd gram = m.components * m.components.transpose();
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
    for (int a = 0; a < 5; ++a)
        for (int b = a + 1; b < 5; ++b)
            EXPECT_LT(std::abs(oracle::correlation(column(m.scores, a), column(m.scores, b))), 1e-8);
    auto share = m.explained_share();
    for (int i = 1; i < 5; ++i) EXPECT_LE(share(i), share(i - 1));
}

TEST(Standardize, ThreeValueColumn) {
    Eigen::MatrixXd x(3, 2);
    x << 1, 1, 2, 2, 3, 3;
    auto s = standardize_scores(pca_fit(x, 1));
    EXPECT_TRUE(s.standardized);
    // sample sd of {-sqrt2, 0, sqrt2} is sqrt2; +-1.2247 would be the population-sd rescale
    EXPECT_NEAR(s.scores(0, 0), -1.0, 1e-12);
    EXPECT_NEAR(s.scores(1, 0), 0.0, 1e-12);
    EXPECT_NEAR(s.scores(2, 0), 1.0, 1e-12);
}

TEST(Standardize, RejectsSecondCall) {
    std::mt19937_64 gen(13);
    auto s = standardize_scores(pca_fit(random_matrix(gen, 6, 3), 2));
    EXPECT_TAXAUDIT_ERROR(standardize_scores(s), "reduce", "already-standardized");
}

TEST(Standardize, UnitSdByRecomputation) {
    std::mt19937_64 gen(14);
    auto s = standardize_scores(pca_fit(random_matrix(gen, 10, 3), 3));
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(oracle::sd(column(s.scores, c)), 1.0, 1e-8);
}

TEST(Standardize, ZeroVarianceColumnFlagged) {
    PCModel m;
    m.mean = Eigen::VectorXd::Zero(2);
    m.components = Eigen::MatrixXd::Identity(2, 2);
    m.eigenvalues = Eigen::Vector2d(1.0, 0.0);
    m.scores.resize(3, 2);
    m.scores << -1, 0, 0, 0, 1, 0;
    m.total_variance = 1.0;
    m.source_index = {0, 1};
    auto s = standardize_scores(m);
    EXPECT_FALSE(s.zero_variance[0]);
    EXPECT_TRUE(s.zero_variance[1]);
    EXPECT_EQ(s.scores.col(1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(EtaSquared, ZeroAndOne) {
    std::vector<double> flat{1, 2, 3, 1, 2, 3};
    std::vector<int> g{0, 0, 0, 1, 1, 1};
    EXPECT_NEAR(eta_squared(flat, g), 0.0, 1e-15);
    std::vector<double> pure{5, 5, 5, -2, -2, -2};
    EXPECT_NEAR(eta_squared(pure, g), 1.0, 1e-15);
}

TEST(EtaSquared, MatchesAnovaOracleAndIsScaleFree) {
    std::mt19937_64 gen(15);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(20);
        std::vector<int> g(20);
        for (std::size_t i = 0; i < v.size(); ++i) {
            g[i] = static_cast<int>(gen() % 4);
            v[i] = normal(gen) + 0.5 * g[i];
        }
        const double e = eta_squared(v, g);
        EXPECT_NEAR(e, oracle::anova_eta_squared(v, g), 1e-12);
        EXPECT_GE(e, 0.0);
        EXPECT_LE(e, 1.0);
        std::vector<double> scaled(v);
        for (auto& x : scaled) x = 3.7 * x - 2.0;
        EXPECT_NEAR(eta_squared(scaled, g), e, 1e-12);
    }
}

// Five score columns; the fourth carries no between-group variation.
TEST(SelectComponents, DropsExactlyTheFlatComponent) {
    const std::vector<int> labels{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
    const std::vector<double> w{-1.5, -0.5, 0.5, 1.5};  // within-group pattern, sums to 0
    PCModel m;
    m.scores.resize(12, 5);
    for (int i = 0; i < 12; ++i) {
        const int g = labels[static_cast<std::size_t>(i)];
        const double within = w[static_cast<std::size_t>(i % 4)];
        m.scores(i, 0) = 4.0 * g + within;
        m.scores(i, 1) = (g == 1 ? 2.0 : -1.0) + within;
        m.scores(i, 2) = g * g + 0.5 * within;
        m.scores(i, 3) = within;
        m.scores(i, 4) = (g == 2 ? 1.0 : 0.0) + 0.3 * within;
    }
    m.mean = Eigen::VectorXd::Zero(5);
    m.components = Eigen::MatrixXd::Identity(5, 5);
    m.eigenvalues = Eigen::VectorXd::Ones(5);
    m.total_variance = 5.0;
    m.source_index = {0, 1, 2, 3, 4};

    auto screened = select_components(m, labels, 0.05);
    EXPECT_EQ(screened.model.n_components(), 4u);
    EXPECT_EQ(screened.model.source_index, (std::vector<std::size_t>{0, 1, 2, 4}));
    EXPECT_EQ(screened.screen.kept, (std::vector<bool>{true, true, true, false, true}));
    for (int c = 0; c < 5; ++c) {
        EXPECT_NEAR(screened.screen.eta_squared[static_cast<std::size_t>(c)],
                    oracle::anova_eta_squared(column(m.scores, c), labels), 1e-12);
    }
    EXPECT_EQ(screened.screen.eta_squared[3], 0.0);
    // column 0 by hand: SSB = 4 * (16 + 0 + 16) = 128, SSW = 3 * 5 = 15
    EXPECT_NEAR(screened.screen.eta_squared[0], 128.0 / 143.0, 1e-12);
    EXPECT_EQ(screened.model.scores.col(3), m.scores.col(4));
}

TEST(SelectComponents, AllDroppedAdvises) {
    PCModel m;
    m.scores.resize(4, 1);
    m.scores << 1, -1, 1, -1;
    m.mean = Eigen::VectorXd::Zero(1);
    m.components = Eigen::MatrixXd::Identity(1, 1);
    m.eigenvalues = Eigen::VectorXd::Ones(1);
    m.source_index = {0};
    EXPECT_TAXAUDIT_ERROR(select_components(m, std::vector<int>{0, 0, 1, 1}, 0.05), "reduce", "all-components-dropped");
}

TEST(SelectComponents, EtaInvariantUnderStandardization) {
    std::mt19937_64 gen(16);
    auto x = random_matrix(gen, 12, 6);
    std::vector<int> labels;
    for (int i = 0; i < 12; ++i) labels.push_back(i % 3);
    auto m = pca_fit(x, 4);
    auto a = select_components(m, labels, 0.0);
    auto b = select_components(standardize_scores(m), labels, 0.0);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(a.screen.eta_squared[c], b.screen.eta_squared[c], 1e-12);
}
