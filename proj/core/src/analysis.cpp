#include "lagbias/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "lagbias/rng.hpp"

namespace lagbias {

double prob_ge(std::span<const double> draws, double threshold) {
  if (draws.empty()) throw std::invalid_argument("prob_ge: no draws");
  const auto hits = std::count_if(draws.begin(), draws.end(),
                                  [threshold](double x) { return x >= threshold; });
  return static_cast<double>(hits) / static_cast<double>(draws.size());
}

double quantile(std::span<const double> values, double level) {
  if (values.empty()) throw std::invalid_argument("quantile: no values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * std::clamp(level, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<Summary> summarize_posterior(const PosteriorDraws& draws, const Diagnostics& diagnostics) {
  std::vector<Summary> out;
  for (std::size_t k = 0; k < draws.dim; ++k) {
    const auto x = draws.pooled(k);
    Summary s;
    s.name = k < draws.names.size() ? draws.names[k] : "x" + std::to_string(k);
    const double n = static_cast<double>(x.size());
    s.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    s.sd = x.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;

    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t q = 0; q < kQuantileLevels.size(); ++q) {
      const double h = (n - 1.0) * kQuantileLevels[q];
      const auto lo = static_cast<std::size_t>(std::floor(h));
      const auto hi = std::min(lo + 1, sorted.size() - 1);
      s.quantiles[q] = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    }
    s.prob_ge_one = prob_ge(x, 1.0);
    s.ess = k < diagnostics.ess.size() ? diagnostics.ess[k] : std::nan("");
    s.rhat = k < diagnostics.rhat.size() ? diagnostics.rhat[k] : std::nan("");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Summary> summarize_posterior(const PosteriorDraws& draws) {
  if (draws.n_chains >= 2 && draws.n_draws >= 4)
    return summarize_posterior(draws, compute_diagnostics(draws));
  return summarize_posterior(draws, Diagnostics{});
}

std::vector<std::string> parameter_names() {
  std::vector<std::string> names{"mu"};
  for (auto f : kFields) names.push_back("alpha_" + std::string(to_string(f)));
  return names;
}

Target make_target(const BiasModel& model) {
  Target t;
  t.dim = BiasModel::kDim;
  t.log_density = [&model](std::span<const double> z, std::span<double> grad) {
    return model.log_density_gradient(z, grad);
  };
  t.to_output = [&model](std::span<const double> z, std::span<double> out) {
    const auto v = model.to_output(z);
    std::copy(v.begin(), v.end(), out.begin());
  };
  t.output_dim = BiasModel::kDim;
  t.names = parameter_names();
  return t;
}

PosteriorRun run_posterior(const PreparedDataset& data, const HmcConfig& config, const Hyper& hyper) {
  const BiasModel model(data, hyper);
  PosteriorRun run;
  run.draws = sample(make_target(model), config);
  if (run.draws.n_chains >= 2) run.diagnostics = compute_diagnostics(run.draws);
  run.diagnostics.divergences = run.draws.total_divergences();
  run.summaries = summarize_posterior(run.draws, run.diagnostics);
  for (auto f : kFields) run.alpha_max[index_of(f)] = data[f].alpha_max;
  return run;
}

double PriorDraws::rejection_fraction() const noexcept {
  const double n = static_cast<double>(kNumFields * mu.size());
  return n > 0 ? outside_mass / n : 0.0;
}

std::vector<double> PriorDraws::pooled_alpha() const {
  std::vector<double> out;
  out.reserve(kNumFields * mu.size());
  for (const auto& a : alpha) out.insert(out.end(), a.begin(), a.end());
  return out;
}

namespace {

constexpr double kRejectionMinMass = 0.3;

double truncated_normal(Rng& rng, double mean, double sd, double upper, double mass) {
  if (mass >= kRejectionMinMass) {
    for (;;) {
      const double a = rng.normal(mean, sd);
      if (a > 0 && a < upper) return a;
    }
  }
  const boost::math::normal_distribution<double> unit;
  const double lo = boost::math::cdf(unit, -mean / sd);
  const double hi = boost::math::cdf(unit, (upper - mean) / sd);
  const double u = lo + rng.uniform_open() * (hi - lo);
  return std::clamp(mean + sd * boost::math::quantile(unit, u), std::nextafter(0.0, 1.0),
                    std::nextafter(upper, 0.0));
}

}  // namespace

PriorDraws sample_prior(std::size_t n, std::uint64_t seed,
                        const std::array<double, kNumFields>& alpha_max, const Hyper& hyper) {
  if (n < 1) throw std::invalid_argument("sample_prior: n must be >= 1");
  Rng rng(seed);
  PriorDraws out;
  out.mu.reserve(n);
  for (auto& a : out.alpha) a.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = rng.gamma(hyper.gamma_shape, hyper.gamma_rate);
    out.mu.push_back(mu);
    for (std::size_t k = 0; k < kNumFields; ++k) {
      const double mass = std::exp(log_truncation_mass(mu, hyper.alpha_sd, alpha_max[k]));
      out.outside_mass += 1.0 - mass;
      out.alpha[k].push_back(truncated_normal(rng, mu, hyper.alpha_sd, alpha_max[k], mass));
    }
  }
  return out;
}

HmcConfig config_for_delta(const HmcConfig& config, int delta) {
  HmcConfig c = config;
  c.seed = derive_seed(config.seed, static_cast<std::uint64_t>(delta));
  return c;
}

SweepTable delta_sweep(std::span<const LaureateRecord> records, const CurveSet& curves,
                       const HmcConfig& config, const SweepOptions& options, const Hyper& hyper) {
  if (options.delta_min > options.delta_max)
    throw std::invalid_argument("delta_sweep: delta_min exceeds delta_max");
  if (options.delta_min < 0) throw std::invalid_argument("delta_sweep: delta must be non-negative");

  const int n_deltas = options.delta_max - options.delta_min + 1;
  std::vector<std::vector<SweepRow>> per_delta(static_cast<std::size_t>(n_deltas));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_deltas));
  std::atomic<int> next{0};

  auto worker = [&] {
    for (int i = next++; i < n_deltas; i = next++) {
      const int delta = options.delta_min + i;
      try {
        try {
          const auto data = prepare(records, curves, delta);
          const auto run = run_posterior(data, config_for_delta(config, delta), hyper);
          for (auto f : kFields) {
            const auto& s = run.summaries[1 + index_of(f)];
            per_delta[static_cast<std::size_t>(i)].push_back(
                {delta, f, s.prob_ge_one, s.mean, s.rhat, s.ess});
          }
        } catch (const std::exception& e) {
          throw SweepError(delta, e.what());
        }
        if (options.on_done) options.on_done(delta);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(n_deltas)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  SweepTable table;
  for (auto& rows : per_delta) table.rows.insert(table.rows.end(), rows.begin(), rows.end());
  return table;
}

double silverman_bandwidth(std::span<const double> draws) {
  if (draws.size() < 2) throw std::invalid_argument("silverman_bandwidth: need >= 2 draws");
  const double n = static_cast<double>(draws.size());
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
  double ss = 0;
  for (double x : draws) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double iqr = quantile(draws, 0.75) - quantile(draws, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0)) spread = sd > 0 ? sd : 1.0;
  return 0.9 * spread * std::pow(n, -0.2);
}

DensitySeries kernel_density(std::span<const double> draws, double lo, double hi,
                             std::size_t n_points) {
  if (n_points < 2 || !(hi > lo)) throw std::invalid_argument("kernel_density: bad grid");
  DensitySeries out;
  out.bandwidth = silverman_bandwidth(draws);
  const double h = out.bandwidth;
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  const double reach = 8.0 * h;

  auto kernel_sum = [&](double x) {
    double s = 0;
    auto first = std::lower_bound(sorted.begin(), sorted.end(), x - reach);
    auto last = std::upper_bound(sorted.begin(), sorted.end(), x + reach);
    for (auto it = first; it != last; ++it) {
      const double u = (x - *it) / h;
      s += std::exp(-0.5 * u * u);
    }
    return s;
  };

  out.x.resize(n_points);
  out.y.resize(n_points);
  const double dx = (hi - lo) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double x = lo + dx * static_cast<double>(i);
    out.x[i] = x;
    // reflection about lo: a draw at d contributes a mirror at 2 lo - d
    out.y[i] = norm * (kernel_sum(x) + kernel_sum(2.0 * lo - x));
  }
  return out;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double s = 0;
  for (std::size_t i = 1; i < x.size() && i < y.size(); ++i)
    s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

}  // namespace lagbias
