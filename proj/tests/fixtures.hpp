#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "footprint/error.hpp"
#include "footprint/ingest.hpp"
#include "footprint/rng.hpp"

namespace testing {

namespace fs = std::filesystem;

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("footprint_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
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

inline fs::path write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<std::string> ids(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Random binary matrix with independent cells.
inline footprint::UserLikeMatrix random_matrix(std::size_t rows, std::size_t cols, double density, footprint::Rng& rng) {
  std::bernoulli_distribution cell(density);
  std::vector<footprint::UserLikeMatrix::Entry> entries;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (cell(rng)) entries.emplace_back(static_cast<std::int32_t>(r), static_cast<std::int32_t>(c));
  return footprint::UserLikeMatrix::from_entries(ids("u", rows), ids("l", cols), std::move(entries));
}

inline Eigen::MatrixXd dense(const footprint::UserLikeMatrix& m) {
  return Eigen::MatrixXd(m.to_sparse());
}

inline Eigen::MatrixXd random_normal(Eigen::Index rows, Eigen::Index cols, footprint::Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  return m;
}

// Largest principal angle (radians) between the column spaces of two
// orthonormal-column matrices, via its sine for accuracy near zero.
inline double max_principal_angle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd residual = B - A * (A.transpose() * B);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  return std::asin(std::clamp(svd.singularValues()(0), 0.0, 1.0));
}

}  // namespace testing
