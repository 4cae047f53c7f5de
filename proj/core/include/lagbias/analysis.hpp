#pragma once
// Posterior summaries, prior simulation, and the lag sweep.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lagbias/bias_model.hpp"
#include "lagbias/dataset.hpp"
#include "lagbias/diagnostics.hpp"
#include "lagbias/hmc.hpp"
#include "lagbias/ratio_model.hpp"

namespace lagbias {

inline constexpr std::array<double, 5> kQuantileLevels{0.025, 0.25, 0.5, 0.75, 0.975};

struct Summary {
  std::string name;
  double mean = 0;
  double sd = 0;
  std::array<double, 5> quantiles{};  // at kQuantileLevels
  double prob_ge_one = 0;
  double ess = 0;
  double rhat = 0;
};

// Fraction of draws >= threshold. Throws std::invalid_argument on empty input.
double prob_ge(std::span<const double> draws, double threshold);

// Linear-interpolation quantile (Hyndman-Fan type 7) of unsorted values.
double quantile(std::span<const double> values, double level);

// Pooled-chain summaries, one per parameter, with diagnostics attached.
std::vector<Summary> summarize_posterior(const PosteriorDraws& draws, const Diagnostics& diagnostics);
std::vector<Summary> summarize_posterior(const PosteriorDraws& draws);

// Parameter names in draw order: mu, alpha_chemistry, alpha_economics, ...
std::vector<std::string> parameter_names();

Target make_target(const BiasModel& model);

struct PosteriorRun {
  PosteriorDraws draws;
  Diagnostics diagnostics;
  std::vector<Summary> summaries;
  std::array<double, kNumFields> alpha_max{};
};

PosteriorRun run_posterior(const PreparedDataset& data, const HmcConfig& config,
                           const Hyper& hyper = {});

struct PriorDraws {
  std::vector<double> mu;
  std::array<std::vector<double>, kNumFields> alpha;
  // Sum over alpha draws of the Normal(mu, sd) mass outside (0, alpha_max).
  double outside_mass = 0;

  std::size_t size() const noexcept { return mu.size(); }
  // Expected share of untruncated proposals that a rejection sampler would
  // throw away.
  double rejection_fraction() const noexcept;
  std::vector<double> pooled_alpha() const;
};

// Ancestral draws: mu ~ Gamma, then each alpha_f ~ Normal(mu, sd) restricted
// to (0, alpha_max_f), the same truncated prior the sampler targets. Plain
// rejection is used while the in-support mass is large and inverse-CDF
// sampling otherwise, so a far-tail mu cannot stall the loop.
PriorDraws sample_prior(std::size_t n, std::uint64_t seed,
                        const std::array<double, kNumFields>& alpha_max, const Hyper& hyper = {});

struct SweepRow {
  int delta = 0;
  Field field = Field::Chemistry;
  double prob_ge_one = 0;
  double mean_alpha = 0;
  double rhat = 0;
  double ess = 0;
};

struct SweepTable {
  std::vector<SweepRow> rows;  // ordered by delta, then field
};

class SweepError : public std::runtime_error {
 public:
  SweepError(int delta, const std::string& what)
      : std::runtime_error("delta " + std::to_string(delta) + ": " + what), delta_(delta) {}
  int delta() const noexcept { return delta_; }

 private:
  int delta_;
};

// Seed used for lag `delta` in a sweep run with `config`.
HmcConfig config_for_delta(const HmcConfig& config, int delta);

struct SweepOptions {
  int delta_min = 0;
  int delta_max = kMaxDelta;
  unsigned workers = 1;  // parallel delta tasks
  std::function<void(int delta)> on_done;  // called after each delta, any thread
};

SweepTable delta_sweep(std::span<const LaureateRecord> records, const CurveSet& curves,
                       const HmcConfig& config, const SweepOptions& options,
                       const Hyper& hyper = {});

struct DensitySeries {
  std::vector<double> x;
  std::vector<double> y;
  double bandwidth = 0;
};

// Silverman rule of thumb: 0.9 * min(sd, IQR / 1.34) * n^(-1/5).
double silverman_bandwidth(std::span<const double> draws);

// Gaussian kernel density on an even grid over [lo, hi], reflected at lo so
// that mass is not lost below a support boundary. For presentation only.
DensitySeries kernel_density(std::span<const double> draws, double lo, double hi,
                             std::size_t n_points);

double trapezoid(std::span<const double> x, std::span<const double> y);

}  // namespace lagbias
