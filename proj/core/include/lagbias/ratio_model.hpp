#pragma once
// Logistic gender-ratio curves: fitting, evaluation, and lagged lookup.
//
//   r(t) = L / (1 + exp(-k (t - t0)))
//
// The fitted curve is used for every year, inside and outside the observed
// range, so r is smooth at every lagged year.

#include <array>
#include <span>
#include <stdexcept>
#include <string>

#include "lagbias/dataset.hpp"

namespace lagbias {

struct LogisticParams {
  double ceiling = 1.0;    // L, in (0, 1]
  double steepness = 0.1;  // k, > 0
  double midpoint = 2000;  // t0, calendar year
};

struct RatioCurve {
  RatioGroup group = RatioGroup::PhysicalSciences;
  LogisticParams params{};
  double rms_residual = 0.0;
  int iterations = 0;
};

// Earliest year any lagged lookup can reach: first award year minus max lag.
inline constexpr int kFirstCurveYear = 1881;
inline constexpr int kLastCurveYear = 2018;
inline constexpr int kMaxDelta = 20;

double eval_ratio(const LogisticParams& p, double year) noexcept;
inline double eval_ratio(const RatioCurve& c, double year) noexcept {
  return eval_ratio(c.params, year);
}

// r at (award_year - delta). delta must be non-negative.
double lagged_ratio(const RatioCurve& curve, int award_year, int delta);

struct FitOptions {
  int max_iterations = 500;       // per start
  double gradient_tolerance = 1e-14;
  double step_tolerance = 1e-12;  // relative
};

class FitError : public std::runtime_error {
 public:
  enum class Kind { Degenerate, NotConverged };

  FitError(Kind kind, const std::string& what, LogisticParams best = {}, double rms = 0.0)
      : std::runtime_error(what), kind_(kind), best_(best), rms_(rms) {}

  Kind kind() const noexcept { return kind_; }
  const LogisticParams& best_so_far() const noexcept { return best_; }
  double best_rms() const noexcept { return rms_; }

 private:
  Kind kind_;
  LogisticParams best_;
  double rms_;
};

// Unweighted least squares in ratio space, Levenberg-damped Gauss-Newton from
// a fixed grid of starting points. Deterministic. All points must belong to
// the same group.
RatioCurve fit_logistic(std::span<const RatioPoint> points, const FitOptions& options = {});

using CurveSet = std::array<RatioCurve, kNumGroups>;

// Fits every group present in `points`.
CurveSet fit_all(std::span<const RatioPoint> points, const FitOptions& options = {});

inline const RatioCurve& curve_for(const CurveSet& curves, Field f) noexcept {
  return curves[index_of(group_of(f))];
}

}  // namespace lagbias
