// Consistency test for the expectation matrix.
//
// A grammar is consistent when the spectral radius of M is below one.  For a
// nonnegative matrix that holds iff some power M^n has every row sum below
// one, and then every later power does too, so it suffices to test
// M, M^2, M^4, ... by repeated squaring.  The squaring loop alone never halts
// when rho(M) >= 1; the loop here is bounded and also stops early with
// Inconsistent once a nonnegative-matrix lower bound on rho exceeds one.
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ptag/expectation.hpp"
#include "ptag/grammar.hpp"

namespace ptag {

template <typename Scalar>
struct RowSumResult {
  bool all_below_one = true;
  Scalar max_row_sum = Scalar(0);
};

template <typename Derived>
RowSumResult<typename Derived::Scalar> row_sum_test(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 0 || m.cols() == 0) return {true, Scalar(0)};
  const Scalar max_sum = m.cwiseAbs().rowwise().sum().maxCoeff();
  return {max_sum < Scalar(1), max_sum};
}

/// M^(2^k) stored as matrix * exp(log_scale).  The stored matrix is divided
/// by its max row sum whenever that leaves [1e-100, 1e100], so entries stay
/// representable while the true power grows or shrinks doubly exponentially.
template <typename Scalar>
class ScaledPower {
 public:
  explicit ScaledPower(Matrix<Scalar> m) : matrix_(std::move(m)) { rescale(); }

  void square() {
    matrix_ = matrix_ * matrix_;
    log_scale_ *= Scalar(2);
    ++squarings_;
    rescale();
  }

  const Matrix<Scalar>& matrix() const { return matrix_; }
  Scalar log_scale() const { return log_scale_; }
  int squarings() const { return squarings_; }
  /// The power 2^k this value represents.
  Scalar exponent() const { return std::ldexp(Scalar(1), squarings_); }

  Scalar max_row_sum() const { return row_sum_test(matrix_).max_row_sum; }
  bool is_zero() const { return max_row_sum() == Scalar(0); }

  /// log ||M^(2^k)||_inf; -inf for the zero matrix.
  Scalar log_norm() const { return log_of(max_row_sum()); }

  /// ||M^(2^k)||_inf^(1/2^k), the Gelfand value at this power.
  Scalar gelfand() const {
    if (is_zero()) return Scalar(0);
    return std::exp(log_norm() / exponent());
  }

  /// Largest of the lower bounds diag(M^n)_ii^(1/n) and, when every row of
  /// M^n has positive sum, (min row sum)^(1/n).
  Scalar lower_bound() const {
    if (matrix_.rows() == 0) return Scalar(0);
    Scalar best = Scalar(0);
    const Scalar diag = matrix_.diagonal().maxCoeff();
    if (diag > Scalar(0)) best = std::exp(log_of(diag) / exponent());
    const Scalar min_row = matrix_.rowwise().sum().minCoeff();
    if (min_row > Scalar(0)) best = std::max(best, std::exp(log_of(min_row) / exponent()));
    return best;
  }

 private:
  Scalar log_of(Scalar scaled) const {
    if (scaled == Scalar(0)) return -std::numeric_limits<Scalar>::infinity();
    return std::log(scaled) + log_scale_;
  }

  void rescale() {
    const Scalar s = max_row_sum();
    if (s == Scalar(0) || (s <= Scalar(1e100) && s >= Scalar(1e-100))) return;
    matrix_ /= s;
    log_scale_ += std::log(s);
  }

  Matrix<Scalar> matrix_;
  Scalar log_scale_ = Scalar(0);
  int squarings_ = 0;
};

enum class Verdict { consistent, inconsistent, indeterminate };

std::string_view to_string(Verdict verdict);

struct TraceEntry {
  int k = 0;
  /// Max row sum of the stored (possibly rescaled) power; the true value is
  /// max_row_sum * exp(log_scale).
  double max_row_sum = 0.0;
  double log_scale = 0.0;

  double true_max_row_sum() const { return max_row_sum * std::exp(log_scale); }
};

struct ConsistencyReport {
  Verdict verdict = Verdict::indeterminate;
  int squarings_used = 0;
  std::vector<TraceEntry> trace;
  double rho_estimate = 0.0;
  double rho_lower_bound = 0.0;
  double tolerance = 0.0;
};

struct ConsistencyOptions {
  int max_squarings = 64;
  double tol = 1e-9;
};

template <typename Derived>
ConsistencyReport check_matrix_consistency(const Eigen::MatrixBase<Derived>& m,
                                           const ConsistencyOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  ConsistencyReport report;
  report.tolerance = options.tol;
  ScaledPower<Scalar> power(m.eval());
  Scalar lower = Scalar(0);
  for (int k = 0;; ++k) {
    if (k > 0) power.square();
    const Scalar scaled_max = power.max_row_sum();
    report.trace.push_back({k, static_cast<double>(scaled_max),
                            static_cast<double>(power.log_scale())});
    report.squarings_used = k;
    report.rho_estimate = static_cast<double>(power.gelfand());

    const bool below_one = power.log_scale() == Scalar(0) ? scaled_max < Scalar(1)
                                                          : power.log_norm() < Scalar(0);
    if (below_one) {
      report.verdict = Verdict::consistent;
      break;
    }
    lower = std::max(lower, power.lower_bound());
    report.rho_lower_bound = static_cast<double>(lower);
    if (lower > Scalar(1) + static_cast<Scalar>(options.tol)) {
      report.verdict = Verdict::inconsistent;
      break;
    }
    if (k >= options.max_squarings) {
      report.verdict = Verdict::indeterminate;
      break;
    }
  }
  report.rho_lower_bound = static_cast<double>(std::max(lower, power.lower_bound()));
  return report;
}

/// Validates the grammar (throws InvalidGrammar on errors) and checks M.
ConsistencyReport check_consistency(const Grammar& g, const ConsistencyOptions& options = {});

template <typename Scalar>
struct SpectralEstimate {
  Scalar rho = Scalar(0);
  bool converged = false;
};

/// Gelfand sequence ||M^(2^k)||_inf^(1/2^k) until successive values differ
/// by less than tol or `iterations` squarings have been spent.
template <typename Derived>
SpectralEstimate<typename Derived::Scalar> spectral_radius_estimate(
    const Eigen::MatrixBase<Derived>& m, int iterations = 64,
    typename Derived::Scalar tol = typename Derived::Scalar(1e-12)) {
  using Scalar = typename Derived::Scalar;
  ScaledPower<Scalar> power(m.eval());
  Scalar previous = power.gelfand();
  if (power.is_zero()) return {Scalar(0), true};
  for (int k = 1; k <= iterations; ++k) {
    power.square();
    if (power.is_zero()) return {Scalar(0), true};
    const Scalar current = power.gelfand();
    if (std::abs(current - previous) < tol) return {current, true};
    previous = current;
  }
  return {previous, false};
}

std::string to_json(const ConsistencyReport& report);

}  // namespace ptag
