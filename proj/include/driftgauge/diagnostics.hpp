#pragma once

// Internal-signal diagnostics of a belief trajectory: correlation between the
// per-step attention scalar and the per-step update divergence, and a
// two-phase reading of the hidden-state path (2-D PCA projection plus k = 2
// Lloyd clustering scored against the changepoint split).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "driftgauge/error.hpp"
#include "driftgauge/rng.hpp"
#include "driftgauge/serialize.hpp"
#include "driftgauge/trajectory.hpp"

namespace driftgauge {

struct CorrelationReport {
  double rho = 0.0;
  double p_value = 1.0;  // two-sided, Student t with n-2 dof
  std::size_t n = 0;
};

// Sample Pearson coefficient. Symmetric in (x, y) bit for bit: only
// commutative products of the centred series are formed.
inline CorrelationReport pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ParameterError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw ParameterError("pearson needs at least 3 samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw DegenerateError("pearson: correlation undefined for a constant series");
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

  CorrelationReport out{rho, 0.0, n};
  if (std::abs(rho) < 1.0) {
    const double dof = static_cast<double>(n - 2);
    const double t = std::abs(rho) * std::sqrt(dof / (1.0 - rho * rho));
    const boost::math::students_t dist(dof);
    out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
  }
  return out;
}

class DegenerateSpectrumError : public DegenerateError {
 public:
  explicit DegenerateSpectrumError(std::size_t rank)
      : DegenerateError("pca2: covariance rank " + std::to_string(rank) +
                        " is below 2"),
        rank_(rank) {}
  std::size_t rank() const noexcept { return rank_; }

 private:
  std::size_t rank_;
};

struct PcaResult {
  Eigen::MatrixXd projection;          // T x 2 scores
  Eigen::MatrixXd components;          // d x 2, unit columns
  Eigen::Vector2d explained_variance;  // top-2 covariance eigenvalues
  Eigen::Vector2d explained_ratio;     // fraction of total variance
};

// Eigenvalues at or below this fraction of the largest count as zero.
inline constexpr double kSpectrumRankTolerance = 1e-10;

inline PcaResult pca2(const Eigen::MatrixXd& data) {
  const Eigen::Index rows = data.rows();
  const Eigen::Index dim = data.cols();
  if (rows < 3 || dim < 2) throw ParameterError("pca2 needs T >= 3 and d >= 2");
  if (!data.allFinite()) throw ParameterError("pca2: data must be finite");

  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  const double scale = 1.0 / static_cast<double>(rows - 1);

  // Eigen-decompose whichever of the covariance (d x d) and Gram (T x T)
  // matrices is smaller; both carry the same nonzero spectrum.
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd top(dim, 2);
  if (dim <= rows) {
    const Eigen::MatrixXd cov = scale * (centered.transpose() * centered);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    eigenvalues = solver.eigenvalues().reverse();
    top.col(0) = solver.eigenvectors().col(dim - 1);
    top.col(1) = solver.eigenvectors().col(dim - 2);
  } else {
    const Eigen::MatrixXd gram = scale * (centered * centered.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    eigenvalues = solver.eigenvalues().reverse();
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd v = centered.transpose() * solver.eigenvectors().col(rows - 1 - k);
      const double norm = v.norm();
      top.col(k) = norm > 0.0 ? Eigen::VectorXd(v / norm) : v;
    }
  }

  const double largest = std::max(eigenvalues(0), 0.0);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (largest > 0.0 && eigenvalues(i) > kSpectrumRankTolerance * largest) ++rank;
  if (rank < 2) throw DegenerateSpectrumError(rank);

  for (int k = 0; k < 2; ++k) {
    Eigen::Index at = 0;
    top.col(k).cwiseAbs().maxCoeff(&at);
    if (top(at, k) < 0.0) top.col(k) = -top.col(k);
  }

  double total = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) total += std::max(eigenvalues(i), 0.0);

  PcaResult out;
  out.components = top;
  out.projection = centered * top;
  out.explained_variance = Eigen::Vector2d(eigenvalues(0), eigenvalues(1));
  out.explained_ratio = out.explained_variance / total;
  return out;
}

struct KMeansResult {
  std::vector<int> assignments;      // cluster id per row, in {0, 1}
  Eigen::MatrixXd centroids;         // 2 x d
  std::vector<double> wcss_history;  // after each centroid update
  std::size_t iterations = 0;
};

inline constexpr std::size_t kKMeansMaxIterations = 1000;

// Lloyd's algorithm with k = 2 and farthest-point seeding: the first centroid
// is the row of largest norm after centring, the second the row farthest from
// it (lowest index wins ties). Points equidistant from both centroids keep
// their current cluster. seed only matters if a cluster empties, which
// farthest-point seeding rules out for k = 2 in exact arithmetic.
inline KMeansResult kmeans2(const Eigen::MatrixXd& data, std::uint64_t seed = 0) {
  const Eigen::Index rows = data.rows();
  if (rows < 2) throw ParameterError("kmeans2 needs at least 2 points");
  if (!data.allFinite()) throw ParameterError("kmeans2: data must be finite");

  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  Eigen::Index first = 0;
  centered.rowwise().squaredNorm().maxCoeff(&first);
  Eigen::Index second = 0;
  const double spread =
      (data.rowwise() - data.row(first)).rowwise().squaredNorm().maxCoeff(&second);
  if (!(spread > 0.0)) throw DegenerateError("kmeans2: all points are identical");

  KMeansResult out;
  out.centroids.resize(2, data.cols());
  out.centroids.row(0) = data.row(first);
  out.centroids.row(1) = data.row(second);
  out.assignments.assign(static_cast<std::size_t>(rows), -1);
  Rng rng(seed);

  for (std::size_t iter = 0; iter < kKMeansMaxIterations; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double d0 = (data.row(i) - out.centroids.row(0)).squaredNorm();
      const double d1 = (data.row(i) - out.centroids.row(1)).squaredNorm();
      int& a = out.assignments[static_cast<std::size_t>(i)];
      const int next = d0 < d1 ? 0 : d1 < d0 ? 1 : (a < 0 ? 0 : a);
      if (next != a) {
        a = next;
        changed = true;
      }
    }
    if (!changed) break;
    out.iterations = iter + 1;

    for (int k = 0; k < 2; ++k) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(data.cols());
      Eigen::Index members = 0;
      for (Eigen::Index i = 0; i < rows; ++i)
        if (out.assignments[static_cast<std::size_t>(i)] == k) {
          sum += data.row(i);
          ++members;
        }
      if (members > 0) {
        out.centroids.row(k) = sum / static_cast<double>(members);
      } else {
        const auto pick = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(rows));
        out.centroids.row(k) = data.row(pick);
      }
    }
    double wcss = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i)
      wcss += (data.row(i) - out.centroids.row(out.assignments[static_cast<std::size_t>(i)]))
                  .squaredNorm();
    out.wcss_history.push_back(wcss);
  }
  return out;
}

// Best agreement, over both id-to-phase mappings, between cluster ids and the
// split "t < t_c -> phase 0, t >= t_c -> phase 1" (t is 1-based).
inline double phase_alignment(std::span<const int> assignments, std::size_t changepoint) {
  if (assignments.empty()) throw ParameterError("phase_alignment: no assignments");
  if (changepoint < 1 || changepoint > assignments.size() + 1)
    throw ParameterError("phase_alignment: t_c out of range");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != 0 && assignments[i] != 1)
      throw ParameterError("phase_alignment: cluster ids must be 0 or 1");
    const int phase = i + 1 < changepoint ? 0 : 1;
    if (assignments[i] == phase) ++agree;
  }
  const double frac = static_cast<double>(agree) / static_cast<double>(assignments.size());
  return std::max(frac, 1.0 - frac);
}

struct ClusterReport {
  Eigen::MatrixXd projection;
  Eigen::Vector2d explained_variance;
  std::vector<int> assignments;
  double alignment = 0.5;
  Eigen::MatrixXd centroids;
};

inline Eigen::MatrixXd hidden_matrix(const BeliefTrajectory& traj) {
  if (!traj.has_hidden()) throw ValidationError("trajectory has no hidden states");
  const auto dim = static_cast<Eigen::Index>(traj.steps.front().hidden->size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(traj.size()), dim);
  for (std::size_t i = 0; i < traj.size(); ++i)
    for (Eigen::Index k = 0; k < dim; ++k)
      m(static_cast<Eigen::Index>(i), k) = (*traj.steps[i].hidden)[static_cast<std::size_t>(k)];
  return m;
}

inline ClusterReport cluster_hidden_states(const Eigen::MatrixXd& hidden,
                                           std::size_t changepoint, std::uint64_t seed = 0) {
  const PcaResult pca = pca2(hidden);
  KMeansResult km = kmeans2(hidden, seed);
  ClusterReport out;
  out.projection = pca.projection;
  out.explained_variance = pca.explained_variance;
  out.alignment = phase_alignment(km.assignments, changepoint);
  out.assignments = std::move(km.assignments);
  out.centroids = std::move(km.centroids);
  return out;
}

inline Json to_json(const CorrelationReport& r) {
  return Json{{"rho", r.rho}, {"p_value", r.p_value}, {"n", r.n}};
}

inline Json to_json(const ClusterReport& r) {
  auto rows = [](const Eigen::MatrixXd& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      Json row = Json::array();
      for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
      out.push_back(std::move(row));
    }
    return out;
  };
  Json j = Json::object();
  j["alignment"] = r.alignment;
  j["assignments"] = r.assignments;
  j["explained_variance"] = Json::array({r.explained_variance(0), r.explained_variance(1)});
  j["projection"] = rows(r.projection);
  j["centroids"] = rows(r.centroids);
  return j;
}

}  // namespace driftgauge
