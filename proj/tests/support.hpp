#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flowcast/random.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 gen{std::random_device{}()};
        path_ = fs::temp_directory_path() / ("flowcast-" + tag + "-" + std::to_string(gen()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Y_t = A Y_{t-1} + e_t with standard normal noise scaled by `sigma`.
inline Eigen::MatrixXd simulate_var1(const Eigen::Matrix2d& a, std::size_t t, std::uint64_t seed, double sigma = 1.0) {
    flowcast::Rng rng(seed);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t), 2);
    Eigen::Vector2d prev = Eigen::Vector2d::Zero();
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(t); ++i) {
        Eigen::Vector2d e(rng.normal() * sigma, rng.normal() * sigma);
        Eigen::Vector2d cur = a * prev + e;
        y.row(i) = cur.transpose();
        prev = cur;
    }
    return y;
}

inline std::vector<double> random_walk(std::size_t n, std::uint64_t seed) {
    flowcast::Rng rng(seed);
    std::vector<double> x(n);
    double level = 0.0;
    for (auto& v : x) {
        level += rng.normal();
        v = level;
    }
    return x;
}

/// X_t = 10 + s[t mod 4], s = (1, -1, 2, -2).
inline double seasonal_value(std::size_t t) {
    static const double s[] = {1.0, -1.0, 2.0, -2.0};
    return 10.0 + s[t % 4];
}

inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace testing
