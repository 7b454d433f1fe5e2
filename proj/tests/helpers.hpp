#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "taxaudit/error.hpp"

namespace testing_support {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("taxaudit-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline oracle::Matrix to_rows(const Eigen::MatrixXd& m) {
    oracle::Matrix out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = m(r, c);
    return out;
}

inline std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
    return std::vector<double>(m.col(c).data(), m.col(c).data() + m.rows());
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(gen);
    return m;
}

}  // namespace testing_support

// Asserts that `stmt` throws taxaudit::Error with the given module and code.
#define EXPECT_TAXAUDIT_ERROR(stmt, mod, cod)                                   \
    do {                                                                        \
        try {                                                                   \
            stmt;                                                               \
            ADD_FAILURE() << "expected " << (mod) << ": " << (cod);             \
        } catch (const taxaudit::Error& e_) {                                   \
            EXPECT_EQ(e_.module(), (mod)) << e_.what();                         \
            EXPECT_EQ(e_.code(), (cod)) << e_.what();                           \
        }                                                                       \
    } while (0)
