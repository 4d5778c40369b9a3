#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fhci/error.hpp"

namespace fhci {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Reciprocal condition number below which a p x p normal-equations matrix
/// is treated as singular.
inline constexpr double kSingularRcond = 1e-12;

/// Allowed drift of the leverage sum away from p.
inline constexpr double kLeverageSumTol = 1e-8;

/// One input row: an area with its direct estimate, sampling variance and covariates.
struct AreaRecord {
  std::string id;
  double y = 0.0;
  double D = 0.0;
  std::vector<double> x;
};

/// Area-level data for the Fay-Herriot model
///   y_i = x_i' beta + v_i + e_i,  v_i ~ N(0, A),  e_i ~ N(0, D_i),
/// with the sampling variances D_i known. Immutable once built.
class FayHerriotDataset {
 public:
  /// Validates and precomputes (X'X)^{-1} and the leverages.
  FayHerriotDataset(std::vector<std::string> ids, Vector y, Vector D, Matrix X)
      : ids_(std::move(ids)), y_(std::move(y)), D_(std::move(D)), X_(std::move(X)) {
    const auto m = static_cast<std::size_t>(X_.rows());
    const auto p = static_cast<std::size_t>(X_.cols());
    if (p < 1) throw Error(ErrorCode::InvalidArgument, "design needs at least one covariate");
    if (static_cast<std::size_t>(y_.size()) != m || static_cast<std::size_t>(D_.size()) != m) {
      throw Error(ErrorCode::InvalidArgument, "y, D and X disagree on the number of areas");
    }
    if (ids_.empty()) {
      ids_.reserve(m);
      for (std::size_t i = 0; i < m; ++i) ids_.push_back(std::to_string(i + 1));
    } else if (ids_.size() != m) {
      throw Error(ErrorCode::InvalidArgument, "area id count does not match the data");
    }
    if (m <= p) {
      throw Error(ErrorCode::TooFewAreas,
                  "need more areas than covariates (m=" + std::to_string(m) +
                      ", p=" + std::to_string(p) + ")");
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double d = D_(static_cast<Eigen::Index>(i));
      if (!(d > 0.0) || !std::isfinite(d)) throw NonPositiveSamplingVariance(i + 1);
      if (!std::isfinite(y_(static_cast<Eigen::Index>(i)))) {
        throw Error(ErrorCode::MalformedInput, "non-finite y in area " + std::to_string(i + 1));
      }
    }
    if (!X_.allFinite()) throw Error(ErrorCode::MalformedInput, "non-finite covariate value");

    Eigen::ColPivHouseholderQR<Matrix> qr(X_);
    qr.setThreshold(1e-12);
    if (static_cast<std::size_t>(qr.rank()) < p) {
      throw Error(ErrorCode::RankDeficientDesign, "rank(X) < p");
    }
    const Matrix xtx = X_.transpose() * X_;
    Eigen::LLT<Matrix> llt(xtx);
    if (llt.info() != Eigen::Success || llt.rcond() < kSingularRcond) {
      throw Error(ErrorCode::RankDeficientDesign, "X'X is numerically singular");
    }
    xtx_inv_ = llt.solve(Matrix::Identity(xtx.rows(), xtx.cols()));

    leverage_ = (X_ * xtx_inv_).cwiseProduct(X_).rowwise().sum();
    if (std::abs(leverage_.sum() - static_cast<double>(p)) > kLeverageSumTol) {
      throw Error(ErrorCode::RankDeficientDesign, "leverages do not sum to p");
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double q = leverage_(static_cast<Eigen::Index>(i));
      if (!(q > 0.0 && q < 1.0)) {
        throw Error(ErrorCode::InvalidArgument,
                    "leverage of area " + std::to_string(i + 1) + " is outside (0, 1)");
      }
    }
  }

  FayHerriotDataset(Vector y, Vector D, Matrix X)
      : FayHerriotDataset({}, std::move(y), std::move(D), std::move(X)) {}

  std::size_t m() const noexcept { return static_cast<std::size_t>(X_.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(X_.cols()); }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Vector& y() const noexcept { return y_; }
  const Vector& D() const noexcept { return D_; }
  const Matrix& X() const noexcept { return X_; }
  const Matrix& xtx_inv() const noexcept { return xtx_inv_; }
  const Vector& leverages() const noexcept { return leverage_; }

  double y(std::size_t i) const { return y_(index(i)); }
  double D(std::size_t i) const { return D_(index(i)); }
  auto x(std::size_t i) const { return X_.row(index(i)).transpose(); }

  double mean_D() const { return D_.mean(); }

  /// True when every D_i equals D_1 exactly.
  bool balanced() const { return (D_.array() == D_(0)).all(); }

  /// Same design and sampling variances, new direct estimates.
  FayHerriotDataset with_y(Vector y) const {
    FayHerriotDataset copy = *this;
    if (y.size() != y_.size()) throw Error(ErrorCode::InvalidArgument, "y has the wrong length");
    copy.y_ = std::move(y);
    return copy;
  }

  /// Throws IndexOutOfRange for i >= m (zero-based).
  Eigen::Index index(std::size_t i) const {
    if (i >= m()) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "area index " + std::to_string(i) + " out of range [0, " +
                      std::to_string(m()) + ")");
    }
    return static_cast<Eigen::Index>(i);
  }

 private:
  std::vector<std::string> ids_;
  Vector y_;
  Vector D_;
  Matrix X_;
  Matrix xtx_inv_;
  Vector leverage_;
};

/// Builds a dataset from parsed records; all rows must carry the same number of covariates.
inline FayHerriotDataset load_dataset(const std::vector<AreaRecord>& rows) {
  if (rows.empty()) throw Error(ErrorCode::TooFewAreas, "no rows");
  const std::size_t p = rows.front().x.size();
  const auto m = static_cast<Eigen::Index>(rows.size());
  std::vector<std::string> ids;
  Vector y(m), D(m);
  Matrix X(m, static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (row.x.size() != p) {
      throw Error(ErrorCode::MalformedInput,
                  "row " + std::to_string(i + 1) + " has " + std::to_string(row.x.size()) +
                      " covariates, expected " + std::to_string(p));
    }
    ids.push_back(row.id);
    y(i) = row.y;
    D(i) = row.D;
    for (std::size_t k = 0; k < p; ++k) X(i, static_cast<Eigen::Index>(k)) = row.x[k];
  }
  return FayHerriotDataset(std::move(ids), std::move(y), std::move(D), std::move(X));
}

/// x_i'(X'X)^{-1}x_i for zero-based area i.
inline double leverage(const FayHerriotDataset& data, std::size_t i) {
  return data.leverages()(data.index(i));
}

/// Intercept-only design of m rows.
inline Matrix intercept_design(std::size_t m) {
  return Matrix::Ones(static_cast<Eigen::Index>(m), 1);
}

}  // namespace fhci
