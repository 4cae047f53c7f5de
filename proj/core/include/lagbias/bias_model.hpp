#pragma once
// Hierarchical binomial bias model.
//
//   f_i     ~ Binomial(N_i, alpha_f * r_{i - delta})
//   alpha_f ~ Normal(mu, alpha_sd) truncated to (0, alpha_max_f)
//   mu      ~ Gamma(shape, rate)
//
// alpha_max_f = 1 / max_i r_{i - delta} keeps every success probability <= 1.
//
// Sampling happens in an unconstrained space z in R^5:
//   mu      = exp(z[0])
//   alpha_f = alpha_max_f * sigmoid(z[1 + f])
// with the log-Jacobian of that map added to the density.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "lagbias/dataset.hpp"
#include "lagbias/ratio_model.hpp"

namespace lagbias {

struct Hyper {
  double alpha_sd = 0.35;  // standard deviation, not variance
  double gamma_shape = 5.0;
  double gamma_rate = 5.0;  // shape-rate convention: mean = shape / rate

  // Moments of alpha when mu is integrated out and truncation is ignored.
  double marginal_alpha_mean() const noexcept { return gamma_shape / gamma_rate; }
  double marginal_alpha_sd() const noexcept;
};

struct ModelParams {
  double mu = 1.0;
  std::array<double, kNumFields> alpha{1.0, 1.0, 1.0, 1.0};

  double operator[](Field f) const noexcept { return alpha[index_of(f)]; }
};

// One field's award years bound to lagged ratios.
struct FieldData {
  std::vector<int> years;
  std::vector<int> trials;  // N_i
  std::vector<int> female;  // f_i
  std::vector<double> ratio;  // r_{i - delta}
  double alpha_max = 1.0;

  bool empty() const noexcept { return trials.empty(); }
};

struct PreparedDataset {
  int delta = 0;
  std::array<FieldData, kNumFields> fields{};

  const FieldData& operator[](Field f) const noexcept { return fields[index_of(f)]; }
  FieldData& operator[](Field f) noexcept { return fields[index_of(f)]; }
};

// alpha_max_f comes from the largest lagged ratio among the field's award
// years; a field without records uses the lagged ratio at kLastCurveYear.
PreparedDataset prepare(std::span<const LaureateRecord> records, const CurveSet& curves, int delta);

// Sets alpha_max from the stored ratios (or keeps the current value when empty).
void refresh_alpha_max(FieldData& data);

// log C(N, f) + f log(theta) + (N - f) log(1 - theta). Requires 0 <= f <= N.
double binomial_logpmf(int f, int n, double theta);

double normal_logpdf(double x, double mean, double sd) noexcept;
double gamma_logpdf(double x, double shape, double rate) noexcept;

// log(Phi(b) - Phi(a)) for a < b, accurate in both tails.
double log_normal_interval(double a, double b) noexcept;

// log of the truncation normalizer of Normal(mu, sd) on (0, upper).
double log_truncation_mass(double mu, double sd, double upper) noexcept;

// Log posterior in constrained space, no Jacobian. Includes every
// normalizing constant of the binomial, gamma and truncated-normal terms, so
// it differs from log p(params | data) only by log p(data).
// Returns -infinity outside the support.
double log_posterior(const ModelParams& params, const PreparedDataset& data, const Hyper& hyper = {});

// Binomial log-likelihood part of log_posterior.
double log_likelihood(const ModelParams& params, const PreparedDataset& data);

class BiasModel {
 public:
  static constexpr std::size_t kDim = 1 + kNumFields;

  explicit BiasModel(PreparedDataset data, Hyper hyper = {});

  ModelParams constrain(std::span<const double> z) const;
  // Throws std::domain_error if any value sits on or beyond a bound.
  std::array<double, kDim> unconstrain(const ModelParams& params) const;

  double log_jacobian(std::span<const double> z) const;

  // log_posterior(constrain(z)) + log_jacobian(z).
  double log_density(std::span<const double> z) const;

  // Returns log_density(z) and writes its gradient into grad (size kDim).
  double log_density_gradient(std::span<const double> z, std::span<double> grad) const;

  // Constrained values in output order (mu, alpha_chemistry, ..., alpha_medicine).
  std::array<double, kDim> to_output(std::span<const double> z) const;

  const PreparedDataset& data() const noexcept { return data_; }
  const Hyper& hyper() const noexcept { return hyper_; }

 private:
  PreparedDataset data_;
  Hyper hyper_;
  double log_choose_total_ = 0;
};

// One field with mu held fixed: a one-dimensional posterior over alpha.
// Sampled through z = logit(alpha / alpha_max).
class SingleFieldModel {
 public:
  SingleFieldModel(FieldData data, double mu, Hyper hyper = {});

  // Unnormalized log posterior in alpha (no Jacobian); -inf outside (0, alpha_max).
  double log_posterior_alpha(double alpha) const;

  double alpha(double z) const noexcept;
  double log_density(double z) const;
  double log_density_gradient(double z, double& grad) const;

  double alpha_max() const noexcept { return data_.alpha_max; }

 private:
  FieldData data_;
  double mu_;
  Hyper hyper_;
  double log_choose_total_ = 0;
};

}  // namespace lagbias
