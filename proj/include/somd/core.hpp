#pragma once

// Foundational types for the experts game: simplex decisions, loss
// sequences, regret accounting and the best-expert oracle.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace somd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A violated precondition or malformed configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed to reach its stopping criterion.
class SolverError : public Error {
 public:
  using Error::Error;
};

namespace tolerance {
/// Entries below -kSimplexHard are rejected outright.
inline constexpr double kSimplexHard = 1e-9;
/// |sum - 1| up to this is repaired by clamp-and-renormalize.
inline constexpr double kSimplexRepairable = 1e-6;
}  // namespace tolerance

inline bool all_finite(const Vector& x) { return x.allFinite(); }

/// A probability distribution over N experts.
class SimplexPoint {
 public:
  const Vector& weights() const { return w_; }
  Index size() const { return w_.size(); }
  double operator[](Index i) const { return w_[i]; }
  double dot(const Vector& loss) const { return w_.dot(loss); }

  friend SimplexPoint validate_simplex(const Vector& x);
  /// Builds the uniform distribution over n experts.
  static SimplexPoint uniform(Index n) {
    if (n < 1) throw InvalidArgument("uniform: dimension must be at least 1");
    return SimplexPoint(Vector::Constant(n, 1.0 / static_cast<double>(n)));
  }
  /// Vertex e_i of the simplex.
  static SimplexPoint vertex(Index n, Index i) {
    if (i < 0 || i >= n) throw InvalidArgument("vertex: index out of range");
    Vector v = Vector::Zero(n);
    v[i] = 1.0;
    return SimplexPoint(std::move(v));
  }

 private:
  explicit SimplexPoint(Vector w) : w_(std::move(w)) {}
  Vector w_;
};

/// Checks that x lies on the probability simplex. Slightly infeasible inputs
/// (entries down to -1e-9, |sum - 1| <= 1e-6) are clamped and renormalized;
/// feasible inputs are kept bit-for-bit.
inline SimplexPoint validate_simplex(const Vector& x) {
  if (x.size() == 0) throw InvalidArgument("validate_simplex: empty vector");
  if (!all_finite(x)) throw InvalidArgument("validate_simplex: non-finite entry");
  if (x.minCoeff() < -tolerance::kSimplexHard) {
    throw InvalidArgument("validate_simplex: negative entry " + std::to_string(x.minCoeff()));
  }
  const double sum = x.sum();
  if (std::abs(sum - 1.0) > tolerance::kSimplexRepairable) {
    throw InvalidArgument("validate_simplex: entries sum to " + std::to_string(sum));
  }
  if (x.minCoeff() >= 0.0 && std::abs(sum - 1.0) <= tolerance::kSimplexHard) {
    return SimplexPoint(x);
  }
  Vector repaired = x.cwiseMax(0.0);
  repaired /= repaired.sum();
  return SimplexPoint(std::move(repaired));
}

/// Loss vector l_t: one (finite) loss per expert.
using LossVector = Vector;

/// Ordered, nonempty sequence of loss vectors of uniform dimension.
/// Stored row-major by round: row t is l_t.
class LossSequence {
 public:
  explicit LossSequence(Matrix rounds) : rounds_(std::move(rounds)) {
    if (rounds_.rows() == 0 || rounds_.cols() == 0) {
      throw InvalidArgument("LossSequence: empty sequence");
    }
    if (!rounds_.allFinite()) throw InvalidArgument("LossSequence: non-finite loss");
  }

  static LossSequence from_rows(const std::vector<LossVector>& rows) {
    if (rows.empty()) throw InvalidArgument("LossSequence: empty sequence");
    Matrix m(static_cast<Index>(rows.size()), rows.front().size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].size() != m.cols()) {
        throw InvalidArgument("LossSequence: rows have different dimensions");
      }
      m.row(static_cast<Index>(t)) = rows[t].transpose();
    }
    return LossSequence(std::move(m));
  }

  Index horizon() const { return rounds_.rows(); }
  Index experts() const { return rounds_.cols(); }
  LossVector round(Index t) const { return rounds_.row(t).transpose(); }
  const Matrix& matrix() const { return rounds_; }

 private:
  Matrix rounds_;
};

struct BestExpert {
  Index index = 0;
  double loss = 0.0;
};

namespace detail {
// Round-by-round accumulation, so prefix totals and final totals agree bitwise.
inline Vector column_totals(const LossSequence& seq) {
  Vector totals = Vector::Zero(seq.experts());
  for (Index t = 0; t < seq.horizon(); ++t) totals += seq.matrix().row(t).transpose();
  return totals;
}

inline BestExpert argmin_expert(const Vector& totals) {
  BestExpert best{0, totals[0]};
  for (Index i = 1; i < totals.size(); ++i) {
    if (totals[i] < best.loss) best = {i, totals[i]};
  }
  return best;
}
}  // namespace detail

/// Expert with the smallest cumulative loss; ties go to the smallest index.
inline BestExpert best_expert(const LossSequence& seq) {
  return detail::argmin_expert(detail::column_totals(seq));
}

struct RegretReport {
  double cumulative_algorithm_loss = 0.0;
  Index best_expert_index = 0;
  double best_expert_loss = 0.0;
  double regret = 0.0;
  /// Running regret after each round, measured against the best expert of
  /// that prefix.
  std::vector<double> per_round_regret;
};

/// Expected-loss regret of a decision sequence; decisions[t] is played
/// against round t.
inline RegretReport regret_of(const std::vector<SimplexPoint>& decisions, const LossSequence& seq) {
  if (static_cast<Index>(decisions.size()) != seq.horizon()) {
    throw InvalidArgument("regret_of: " + std::to_string(decisions.size()) + " decisions for " +
                          std::to_string(seq.horizon()) + " rounds");
  }
  RegretReport report;
  report.per_round_regret.reserve(decisions.size());
  Vector totals = Vector::Zero(seq.experts());
  double alg = 0.0;
  for (Index t = 0; t < seq.horizon(); ++t) {
    const auto& p = decisions[static_cast<std::size_t>(t)];
    if (p.size() != seq.experts()) throw InvalidArgument("regret_of: dimension mismatch");
    const auto row = seq.matrix().row(t);
    alg += p.weights().dot(row.transpose());
    totals += row.transpose();
    report.per_round_regret.push_back(alg - totals.minCoeff());
  }
  const BestExpert best = detail::argmin_expert(totals);
  report.cumulative_algorithm_loss = alg;
  report.best_expert_index = best.index;
  report.best_expert_loss = best.loss;
  report.regret = alg - best.loss;
  return report;
}

}  // namespace somd
