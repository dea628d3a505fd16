#include "footprint/dimred.hpp"

#include <cmath>
#include <random>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "footprint/csv.hpp"
#include "footprint/error.hpp"
#include "footprint/io.hpp"
#include "footprint/rng.hpp"

namespace footprint {

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

// Flip paired singular vectors so the largest-magnitude entry of each V column is positive.
void fix_signs(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index arg = 0;
    v.col(j).cwiseAbs().maxCoeff(&arg);
    if (v(arg, j) < 0.0) {
      v.col(j) *= -1.0;
      u.col(j) *= -1.0;
    }
  }
}

void rotate_pair(Eigen::MatrixXd& m, Eigen::Index j, Eigen::Index k, double c, double s) {
  Eigen::VectorXd x = m.col(j);
  m.col(j) = c * x + s * m.col(k);
  m.col(k) = -s * x + c * m.col(k);
}

}  // namespace

SvdFactors truncated_svd(const SparseRowMatrix& a, Eigen::Index K, std::uint64_t seed, SvdOptions opts) {
  const Eigen::Index m = a.rows(), n = a.cols();
  if (K < 1 || K > std::min(m, n)) {
    fail(ErrorKind::parameter, fmt::format("SVD rank {} outside [1, {}]", K, std::min(m, n)));
  }
  const Eigen::Index width = std::min(K + std::max<Eigen::Index>(opts.oversampling, 0), std::min(m, n));

  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd omega(n, width);
  for (Eigen::Index j = 0; j < width; ++j)
    for (Eigen::Index i = 0; i < n; ++i) omega(i, j) = normal(rng);

  const SparseRowMatrix at = a.transpose();
  Eigen::MatrixXd q = orthonormal_basis(a * omega);
  for (int it = 0; it < opts.power_iterations; ++it) {
    Eigen::MatrixXd z = orthonormal_basis(at * q);
    q = orthonormal_basis(a * z);
  }

  // B = Q^T A, formed as (A^T Q)^T to stay on sparse-times-dense products.
  const Eigen::MatrixXd b = (at * q).transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);

  SvdFactors f;
  f.rank = K;
  f.U = q * svd.matrixU().leftCols(K);
  f.S = svd.singularValues().head(K);
  f.V = svd.matrixV().leftCols(K);
  fix_signs(f.U, f.V);
  return f;
}

SvdFactors truncated_svd(const UserLikeMatrix& matrix, Eigen::Index K, std::uint64_t seed, SvdOptions opts) {
  if (matrix.empty()) fail(ErrorKind::empty, "SVD of an empty matrix");
  return truncated_svd(matrix.to_sparse(), K, seed, opts);
}

double varimax_criterion(const Eigen::MatrixXd& loadings) {
  const double n = static_cast<double>(loadings.rows());
  double total = 0.0;
  for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
    const Eigen::ArrayXd sq = loadings.col(j).array().square();
    const double m2 = sq.sum() / n;
    total += sq.square().sum() / n - m2 * m2;
  }
  return total;
}

VarimaxResult varimax(const Eigen::MatrixXd& loadings, const VarimaxOptions& opts) {
  if (!loadings.allFinite()) fail(ErrorKind::parameter, "varimax: non-finite loadings");
  const Eigen::Index p = loadings.rows(), k = loadings.cols();
  if (p == 0 || k == 0) fail(ErrorKind::parameter, "varimax: empty loading matrix");

  Eigen::VectorXd norms = Eigen::VectorXd::Ones(p);
  Eigen::MatrixXd work = loadings;
  if (opts.kaiser_normalize) {
    norms = loadings.rowwise().norm();
    for (Eigen::Index i = 0; i < p; ++i)
      if (norms(i) > 0.0) work.row(i) /= norms(i);
  }

  VarimaxResult res;
  res.rotation = Eigen::MatrixXd::Identity(k, k);
  res.criterion_trace.push_back(varimax_criterion(work));

  const double n = static_cast<double>(p);
  for (int sweep = 0; k > 1 && sweep < opts.max_sweeps; ++sweep) {
    const Eigen::MatrixXd work_before = work, rot_before = res.rotation;
    for (Eigen::Index j = 0; j + 1 < k; ++j) {
      for (Eigen::Index l = j + 1; l < k; ++l) {
        const Eigen::ArrayXd x = work.col(j).array(), y = work.col(l).array();
        const Eigen::ArrayXd u = x.square() - y.square();
        const Eigen::ArrayXd v = 2.0 * x * y;
        const double A = u.sum(), B = v.sum();
        const double C = (u.square() - v.square()).sum();
        const double D = 2.0 * (u * v).sum();
        const double num = D - 2.0 * A * B / n;
        const double den = C - (A * A - B * B) / n;
        const double phi = 0.25 * std::atan2(num, den);
        if (std::abs(phi) < 1e-15) continue;
        const double c = std::cos(phi), s = std::sin(phi);
        rotate_pair(work, j, l, c, s);
        rotate_pair(res.rotation, j, l, c, s);
      }
    }
    const double crit = varimax_criterion(work);
    const double prev = res.criterion_trace.back();
    if (crit < prev) {
      // Rounding-level regression at convergence: keep the previous sweep.
      work = work_before;
      res.rotation = rot_before;
      break;
    }
    res.criterion_trace.push_back(crit);
    if (crit - prev < opts.tol) break;
  }

  res.loadings = loadings * res.rotation;
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::Index arg = 0;
    res.loadings.col(j).cwiseAbs().maxCoeff(&arg);
    if (res.loadings(arg, j) < 0.0) {
      res.loadings.col(j) *= -1.0;
      res.rotation.col(j) *= -1.0;
    }
  }
  return res;
}

Eigen::MatrixXd project_users(const SvdFactors& f, const std::optional<Eigen::MatrixXd>& rotation) {
  if (f.U.cols() != f.S.size()) fail(ErrorKind::parameter, "project_users: U and S disagree in rank");
  Eigen::MatrixXd scores = f.U * f.S.asDiagonal();
  if (!rotation) return scores;
  if (rotation->rows() != f.S.size() || rotation->cols() != f.S.size()) {
    fail(ErrorKind::parameter, fmt::format("project_users: rotation is {}x{}, rank is {}", rotation->rows(),
                                           rotation->cols(), f.S.size()));
  }
  return scores * *rotation;
}

RotatedScores rotate_factors(const SvdFactors& f, const VarimaxOptions& opts) {
  VarimaxResult vm = varimax(f.V, opts);
  RotatedScores out;
  out.scores = project_users(f, vm.rotation);
  out.loadings = std::move(vm.loadings);
  out.rotation = std::move(vm.rotation);
  out.criterion_trace = std::move(vm.criterion_trace);
  return out;
}

CorrelationTable trait_correlations(const Eigen::MatrixXd& scores, const TraitTable& traits) {
  if (static_cast<std::size_t>(scores.rows()) != traits.size()) {
    fail(ErrorKind::parameter, fmt::format("trait_correlations: {} score rows vs {} users", scores.rows(), traits.size()));
  }
  const Eigen::Index n = scores.rows();
  CorrelationTable out;
  out.r = Eigen::MatrixXd::Zero(scores.cols(), kNumTraits);
  for (Trait t : kAllTraits) {
    if (!traits.complete(t)) fail(ErrorKind::validation, fmt::format("trait {} has missing values", name_of(t)));
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = *traits[static_cast<std::size_t>(i)][t];
    y.array() -= y.mean();
    const double syy = y.squaredNorm();
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      Eigen::VectorXd x = scores.col(j);
      x.array() -= x.mean();
      const double sxx = x.squaredNorm();
      if (sxx <= 0.0 || syy <= 0.0) {
        out.zero_variance.emplace_back(j, t);
        continue;
      }
      out.r(j, index_of(t)) = std::clamp(x.dot(y) / std::sqrt(sxx * syy), -1.0, 1.0);
    }
  }
  return out;
}

void save_scores(const ScoreTable& table, const std::filesystem::path& path) {
  if (static_cast<std::size_t>(table.scores.rows()) != table.user_ids.size()) {
    fail(ErrorKind::parameter, "save_scores: row count mismatch");
  }
  std::string out = "user_id";
  for (Eigen::Index j = 0; j < table.scores.cols(); ++j) out += fmt::format(",dim{}", j + 1);
  out += '\n';
  for (std::size_t i = 0; i < table.user_ids.size(); ++i) {
    out += csv::escape(table.user_ids[i]);
    for (Eigen::Index j = 0; j < table.scores.cols(); ++j) {
      out += ',';
      out += io::format_double(table.scores(static_cast<Eigen::Index>(i), j));
    }
    out += '\n';
  }
  io::atomic_write(path, out);
}

ScoreTable load_scores(const std::filesystem::path& path) {
  csv::Reader reader(path);
  std::vector<std::string> fields;
  if (!reader.next(fields) || fields.size() < 2 || fields[0] != "user_id") {
    fail(ErrorKind::parse, path.string() + ": not a score table");
  }
  const std::size_t k = fields.size() - 1;
  ScoreTable table;
  std::vector<double> values;
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != k + 1) {
      fail(ErrorKind::parse, fmt::format("{}:{}: expected {} fields", path.string(), reader.line(), k + 1));
    }
    table.user_ids.push_back(fields[0]);
    for (std::size_t j = 1; j <= k; ++j) {
      double v = 0.0;
      if (!io::parse_double(fields[j], v)) {
        fail(ErrorKind::parse, fmt::format("{}:{}: bad number '{}'", path.string(), reader.line(), fields[j]));
      }
      values.push_back(v);
    }
  }
  table.scores = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(table.user_ids.size()), static_cast<Eigen::Index>(k));
  return table;
}

}  // namespace footprint
