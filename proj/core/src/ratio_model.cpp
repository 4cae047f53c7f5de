#include "lagbias/ratio_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

namespace lagbias {

namespace {

constexpr double kMinCeiling = 1e-6;
constexpr double kMaxCeiling = 1.0;
constexpr double kMinSteepness = 1e-8;
constexpr double kMaxSteepness = 5.0;
constexpr double kMidpointRange = 500.0;  // |t0 - reference year| bound

struct Sample {
  double t;  // centred year
  double y;
};

// Parameters with t0 expressed relative to the reference year.
struct Theta {
  double L, k, t0;
};

double logistic(double x) noexcept {
  // numerically safe for large |x|
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sse(const Theta& p, std::span<const Sample> data) {
  double s = 0;
  for (const auto& d : data) {
    const double e = p.L * logistic(p.k * (d.t - p.t0)) - d.y;
    s += e * e;
  }
  return s;
}

Theta project(Theta p) {
  p.L = std::clamp(p.L, kMinCeiling, kMaxCeiling);
  p.k = std::clamp(p.k, kMinSteepness, kMaxSteepness);
  p.t0 = std::clamp(p.t0, -kMidpointRange, kMidpointRange);
  return p;
}

// Solves the 3x3 symmetric positive definite system A x = b by Gaussian
// elimination with partial pivoting. Returns false when singular.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
            std::array<double, 3>& x) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (!(std::abs(a[piv][col]) > 0)) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < 3; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
}

struct RunResult {
  Theta theta;
  double sse;
  int iterations;
  bool converged;
};

RunResult levenberg_marquardt(Theta p, std::span<const Sample> data, const FitOptions& opt) {
  double lambda = 1e-3;
  double cur = sse(p, data);
  const double scale = std::max(1.0, static_cast<double>(data.size()));

  for (int it = 0; it < opt.max_iterations; ++it) {
    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jte{};
    for (const auto& d : data) {
      const double s = logistic(p.k * (d.t - p.t0));
      const double e = p.L * s - d.y;
      const double ds = s * (1.0 - s);
      const std::array<double, 3> j{s, p.L * ds * (d.t - p.t0), -p.L * ds * p.k};
      for (int a = 0; a < 3; ++a) {
        jte[a] += j[a] * e;
        for (int b = 0; b < 3; ++b) jtj[a][b] += j[a] * j[b];
      }
    }
    const double gnorm = std::sqrt(jte[0] * jte[0] + jte[1] * jte[1] + jte[2] * jte[2]);
    if (gnorm / scale < opt.gradient_tolerance) return {p, cur, it, true};

    bool accepted = false;
    while (lambda < 1e16) {
      auto damped = jtj;
      for (int a = 0; a < 3; ++a) damped[a][a] += lambda * std::max(jtj[a][a], 1e-12);
      std::array<double, 3> step{};
      if (solve3(damped, {-jte[0], -jte[1], -jte[2]}, step)) {
        const Theta trial = project({p.L + step[0], p.k + step[1], p.t0 + step[2]});
        const double next = sse(trial, data);
        if (next < cur) {
          const double rel = std::abs(trial.L - p.L) / std::max(p.L, 1e-12) +
                             std::abs(trial.k - p.k) / std::max(p.k, 1e-12) +
                             std::abs(trial.t0 - p.t0) / std::max(1.0, std::abs(p.t0));
          const double improvement = cur - next;
          p = trial;
          cur = next;
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
          if (rel < opt.step_tolerance || improvement <= 1e-15 * std::max(cur, 1e-300)) {
            return {p, cur, it + 1, true};
          }
          break;
        }
      }
      lambda *= 4.0;
    }
    // No descent direction left at any damping: a (possibly bound-constrained) minimum.
    if (!accepted) return {p, cur, it, true};
  }
  return {p, cur, opt.max_iterations, false};
}

}  // namespace

double eval_ratio(const LogisticParams& p, double year) noexcept {
  return p.ceiling * logistic(p.steepness * (year - p.midpoint));
}

double lagged_ratio(const RatioCurve& curve, int award_year, int delta) {
  if (delta < 0) throw std::invalid_argument("lagged_ratio: delta must be non-negative");
  return eval_ratio(curve, static_cast<double>(award_year - delta));
}

RatioCurve fit_logistic(std::span<const RatioPoint> points, const FitOptions& options) {
  if (points.size() < kMinPointsPerGroup) {
    throw FitError(FitError::Kind::Degenerate,
                   "logistic fit needs at least " + std::to_string(kMinPointsPerGroup) +
                       " points, got " + std::to_string(points.size()));
  }
  const RatioGroup group = points.front().group;
  for (const auto& p : points) {
    if (p.group != group) throw std::invalid_argument("fit_logistic: points span several groups");
  }

  std::set<int> years;
  std::set<double> values;
  double ref = 0, max_ratio = 0;
  for (const auto& p : points) {
    years.insert(p.year);
    values.insert(p.ratio);
    ref += p.year;
    max_ratio = std::max(max_ratio, p.ratio);
  }
  ref /= static_cast<double>(points.size());
  if (years.size() < 3 || values.size() < 3) {
    throw FitError(FitError::Kind::Degenerate,
                   "logistic fit is under-determined: need at least 3 distinct years and 3 "
                   "distinct ratio values");
  }

  std::vector<Sample> data;
  data.reserve(points.size());
  for (const auto& p : points) data.push_back({p.year - ref, p.ratio});

  const double first = *years.begin() - ref;
  const double last = *years.rbegin() - ref;
  const double ceiling0 = std::min(1.0, 1.5 * max_ratio);
  const std::array<double, 4> k_grid{0.01, 0.03, 0.1, 0.3};

  RunResult best{{ceiling0, k_grid[0], 0.0}, std::numeric_limits<double>::infinity(), 0, false};
  RunResult best_converged = best;
  int total_iterations = 0;
  for (double t0 = first - 50.0; t0 <= last + 50.0 + 1e-9; t0 += 10.0) {
    for (double k : k_grid) {
      const auto r = levenberg_marquardt({ceiling0, k, t0}, data, options);
      total_iterations += r.iterations;
      if (r.sse < best.sse) best = r;
      if (r.converged && r.sse < best_converged.sse) best_converged = r;
    }
  }

  const auto to_params = [ref](const Theta& t) {
    return LogisticParams{t.L, t.k, t.t0 + ref};
  };
  const double n = static_cast<double>(points.size());
  if (!std::isfinite(best_converged.sse)) {
    throw FitError(FitError::Kind::NotConverged,
                   "logistic fit for group '" + std::string(to_string(group)) +
                       "' did not converge within the iteration budget",
                   to_params(best.theta), std::sqrt(best.sse / n));
  }
  return {group, to_params(best_converged.theta), std::sqrt(best_converged.sse / n),
          total_iterations};
}

CurveSet fit_all(std::span<const RatioPoint> points, const FitOptions& options) {
  CurveSet curves{};
  for (auto g : kGroups) {
    const auto pts = points_for(points, g);
    curves[index_of(g)] = fit_logistic(pts, options);
  }
  return curves;
}

}  // namespace lagbias
