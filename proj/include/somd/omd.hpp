#pragma once

// Online mirror descent over the simplex in proximal form, the certified
// learning rate, and the exponential-weights baseline.

#include "somd/core.hpp"
#include "somd/regularizers.hpp"
#include "somd/simplex_solvers.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace somd {

struct OmdState {
  SimplexPoint current;
  Regularizer regularizer;
  double eta = 0.0;
  /// 1-based index of the round about to be played.
  Index round = 1;
  double cumulative_loss = 0.0;
};

/// Minimizer of R over the simplex.
inline SimplexPoint regularizer_minimizer(const Regularizer& r) {
  const Index n = r.dimension();
  switch (r.kind()) {
    case Regularizer::Kind::kNegEntropy:
    case Regularizer::Kind::kSquaredQNorm:
    case Regularizer::Kind::kScaledEuclidean:
      return SimplexPoint::uniform(n);
    default:
      break;
  }
  if (r.is_isotropic()) return SimplexPoint::uniform(n);
  const Vector start = Vector::Constant(n, 1.0 / static_cast<double>(n));
  return validate_simplex(minimize_on_simplex(r, Vector::Zero(n), start));
}

/// Learner state before the first round: p_1 = argmin R over the simplex.
inline OmdState init(const Regularizer& r, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("init: eta must be positive");
  return OmdState{regularizer_minimizer(r), r, eta, 1, 0.0};
}

/// (D / G) sqrt(2 alpha / T).
inline double optimal_rate(const Certificate& cert, Index horizon) {
  if (horizon < 1) throw InvalidArgument("optimal_rate: T must be at least 1");
  return std::sqrt(cert.D_squared) / cert.G * std::sqrt(2.0 * cert.alpha / static_cast<double>(horizon));
}

/// argmin over the simplex of eta * loss.p + B_R(p, anchor).
inline SimplexPoint proximal_step(const Regularizer& r, const SimplexPoint& anchor, const Vector& loss, double eta) {
  if (loss.size() != r.dimension() || anchor.size() != r.dimension()) {
    throw InvalidArgument("proximal_step: dimension mismatch");
  }
  if (!loss.allFinite()) throw InvalidArgument("proximal_step: non-finite loss");
  const Vector& p = anchor.weights();
  if (r.kind() == Regularizer::Kind::kNegEntropy) {
    // Multiplicative weights, shifted so the largest factor is 1.
    const Vector scaled = eta * loss;
    const double shift = scaled.minCoeff();
    Vector w = p.array() * (-(scaled.array() - shift)).exp();
    return validate_simplex(w / w.sum());
  }
  // B_R(p, a) = R(p) - grad R(a).p + const, so the objective is R(p) + c.p.
  Vector c = eta * loss;
  if (const auto& quad = r.quadratic_matrix()) {
    c -= 2.0 * (*quad * p);
  } else {
    c -= r.gradient(p);
  }
  Vector next = minimize_on_simplex(r, c, p);
  return validate_simplex(next);
}

/// One round: charge p_t . loss and move to the proximal update.
inline OmdState step(const OmdState& state, const Vector& loss) {
  OmdState next = state;
  next.cumulative_loss += state.current.dot(loss);
  next.current = proximal_step(state.regularizer, state.current, loss, state.eta);
  next.round += 1;
  return next;
}

struct RunResult {
  /// decisions[t] was played before loss t was revealed.
  std::vector<SimplexPoint> decisions;
  RegretReport report;
};

inline RunResult run(const Regularizer& r, double eta, const LossSequence& seq) {
  if (seq.experts() != r.dimension()) throw InvalidArgument("run: sequence and regularizer dimensions differ");
  OmdState state = init(r, eta);
  RunResult out;
  out.decisions.reserve(static_cast<std::size_t>(seq.horizon()));
  for (Index t = 0; t < seq.horizon(); ++t) {
    out.decisions.push_back(state.current);
    if (t + 1 < seq.horizon()) {
      state = step(state, seq.round(t));
    }
  }
  out.report = regret_of(out.decisions, seq);
  return out;
}

/// Exponential weights from the cumulative losses: p_t proportional to
/// exp(-eta * L_{t-1}).
inline RunResult hedge(double eta, const LossSequence& seq) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("hedge: eta must be positive");
  const Index n = seq.experts();
  Vector cumulative = Vector::Zero(n);
  RunResult out;
  out.decisions.reserve(static_cast<std::size_t>(seq.horizon()));
  for (Index t = 0; t < seq.horizon(); ++t) {
    const Vector scaled = -eta * cumulative;
    const double top = scaled.maxCoeff();
    Vector w = (scaled.array() - top).exp().matrix();
    out.decisions.push_back(validate_simplex(w / w.sum()));
    cumulative += seq.matrix().row(t).transpose();
  }
  out.report = regret_of(out.decisions, seq);
  return out;
}

}  // namespace somd
