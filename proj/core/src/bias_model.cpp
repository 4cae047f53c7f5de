#include "lagbias/bias_model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace lagbias {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) noexcept {
  return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_phi(double x) noexcept { return -0.5 * x * x - kLogSqrt2Pi; }

// log Phi(x)
double log_ndtr(double x) noexcept {
  if (x > -37.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  // Asymptotic expansion of the Mills ratio.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - std::log(-x) - kLogSqrt2Pi + std::log(series);
}

struct Term {
  double value = 0;
  double dz = 0;  // derivative with respect to the field's unconstrained coordinate
};

// Binomial log-likelihood of one field as a function of z = logit(alpha / alpha_max),
// without the log C(N, f) constants.
Term field_likelihood(const FieldData& d, double z) noexcept {
  const double s = sigmoid(z);
  const double one_minus_s = sigmoid(-z);
  const double log_s = log_sigmoid(z);
  Term t;
  for (std::size_t i = 0; i < d.trials.size(); ++i) {
    const double q = d.ratio[i] * d.alpha_max;  // theta = s * q, q <= 1
    const int f = d.female[i];
    const int fails = d.trials[i] - f;
    const double one_minus_theta = one_minus_s + s * (1.0 - q);
    if (f > 0) {
      t.value += f * (log_s + std::log(q));
      t.dz += f * one_minus_s;
    }
    if (fails > 0) {
      if (!(one_minus_theta > 0)) return {kNegInf, 0};
      t.value += fails * std::log(one_minus_theta);
      t.dz -= fails * q * s * one_minus_s / one_minus_theta;
    }
  }
  return t;
}

double sum_log_choose(const FieldData& d) {
  double s = 0;
  for (std::size_t i = 0; i < d.trials.size(); ++i) s += log_choose(d.trials[i], d.female[i]);
  return s;
}

}  // namespace

double Hyper::marginal_alpha_sd() const noexcept {
  return std::sqrt(alpha_sd * alpha_sd + gamma_shape / (gamma_rate * gamma_rate));
}

void refresh_alpha_max(FieldData& data) {
  if (data.ratio.empty()) return;
  data.alpha_max = 1.0 / *std::max_element(data.ratio.begin(), data.ratio.end());
}

PreparedDataset prepare(std::span<const LaureateRecord> records, const CurveSet& curves, int delta) {
  if (delta < 0) throw std::invalid_argument("prepare: delta must be non-negative");
  PreparedDataset out;
  out.delta = delta;
  for (const auto& r : records) {
    auto& fd = out.fields[index_of(r.field)];
    fd.years.push_back(r.year);
    fd.trials.push_back(r.n_awarded);
    fd.female.push_back(r.n_female);
    fd.ratio.push_back(lagged_ratio(curve_for(curves, r.field), r.year, delta));
  }
  for (auto f : kFields) {
    auto& fd = out.fields[index_of(f)];
    if (fd.empty()) {
      fd.alpha_max = 1.0 / lagged_ratio(curve_for(curves, f), kLastCurveYear, delta);
    } else {
      refresh_alpha_max(fd);
    }
  }
  return out;
}

double binomial_logpmf(int f, int n, double theta) {
  assert(0 <= f && f <= n);
  double lp = log_choose(n, f);
  if (f > 0) lp += f * std::log(theta);
  if (n - f > 0) lp += (n - f) * std::log1p(-theta);
  return lp;
}

double normal_logpdf(double x, double mean, double sd) noexcept {
  const double u = (x - mean) / sd;
  return -0.5 * u * u - std::log(sd) - kLogSqrt2Pi;
}

double gamma_logpdf(double x, double shape, double rate) noexcept {
  if (!(x > 0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_normal_interval(double a, double b) noexcept {
  if (b <= 0) {
    const double lb = log_ndtr(b);
    return lb + std::log(-std::expm1(log_ndtr(a) - lb));
  }
  if (a >= 0) {
    const double la = log_ndtr(-a);
    return la + std::log(-std::expm1(log_ndtr(-b) - la));
  }
  const double lower = 0.5 * std::erfc(-a / std::numbers::sqrt2);
  const double upper = 0.5 * std::erfc(b / std::numbers::sqrt2);
  return std::log1p(-(lower + upper));
}

double log_truncation_mass(double mu, double sd, double upper) noexcept {
  return log_normal_interval(-mu / sd, (upper - mu) / sd);
}

double log_likelihood(const ModelParams& params, const PreparedDataset& data) {
  double ll = 0;
  for (auto f : kFields) {
    const auto& d = data[f];
    const double alpha = params[f];
    for (std::size_t i = 0; i < d.trials.size(); ++i) {
      const double theta = alpha * d.ratio[i];
      const int fem = d.female[i];
      const int fails = d.trials[i] - fem;
      if ((fem > 0 && !(theta > 0)) || (fails > 0 && !(theta < 1))) return kNegInf;
      ll += binomial_logpmf(fem, d.trials[i], theta);
    }
  }
  return ll;
}

double log_posterior(const ModelParams& params, const PreparedDataset& data, const Hyper& hyper) {
  if (!(params.mu > 0)) return kNegInf;
  double lp = gamma_logpdf(params.mu, hyper.gamma_shape, hyper.gamma_rate);
  for (auto f : kFields) {
    const double alpha = params[f];
    const double upper = data[f].alpha_max;
    if (!(alpha > 0 && alpha < upper)) return kNegInf;
    lp += normal_logpdf(alpha, params.mu, hyper.alpha_sd) -
          log_truncation_mass(params.mu, hyper.alpha_sd, upper);
  }
  return lp + log_likelihood(params, data);
}

// BiasModel

BiasModel::BiasModel(PreparedDataset data, Hyper hyper) : data_(std::move(data)), hyper_(hyper) {
  for (const auto& fd : data_.fields) {
    if (fd.trials.size() != fd.female.size() || fd.trials.size() != fd.ratio.size())
      throw std::invalid_argument("BiasModel: ragged field arrays");
    if (!(fd.alpha_max > 0) || !std::isfinite(fd.alpha_max))
      throw std::invalid_argument("BiasModel: alpha_max must be positive and finite");
    log_choose_total_ += sum_log_choose(fd);
  }
}

ModelParams BiasModel::constrain(std::span<const double> z) const {
  ModelParams p;
  p.mu = std::exp(z[0]);
  for (auto f : kFields) {
    const auto k = index_of(f);
    p.alpha[k] = data_.fields[k].alpha_max * sigmoid(z[1 + k]);
  }
  return p;
}

std::array<double, BiasModel::kDim> BiasModel::unconstrain(const ModelParams& params) const {
  if (!(params.mu > 0) || !std::isfinite(params.mu))
    throw std::domain_error("unconstrain: mu must be positive and finite");
  std::array<double, kDim> z{};
  z[0] = std::log(params.mu);
  for (auto f : kFields) {
    const auto k = index_of(f);
    const double upper = data_.fields[k].alpha_max;
    const double a = params.alpha[k];
    if (!(a > 0 && a < upper))
      throw std::domain_error("unconstrain: alpha_" + std::string(to_string(f)) +
                              " must lie strictly inside (0, alpha_max)");
    const double u = a / upper;
    z[1 + k] = std::log(u) - std::log1p(-u);
  }
  return z;
}

double BiasModel::log_jacobian(std::span<const double> z) const {
  double lj = z[0];
  for (std::size_t k = 0; k < kNumFields; ++k) {
    lj += std::log(data_.fields[k].alpha_max) + log_sigmoid(z[1 + k]) + log_sigmoid(-z[1 + k]);
  }
  return lj;
}

double BiasModel::log_density(std::span<const double> z) const {
  std::array<double, kDim> scratch{};
  return log_density_gradient(z, scratch);
}

double BiasModel::log_density_gradient(std::span<const double> z, std::span<double> grad) const {
  const double sd = hyper_.alpha_sd;
  const double var = sd * sd;
  const double mu = std::exp(z[0]);

  double lp = gamma_logpdf(mu, hyper_.gamma_shape, hyper_.gamma_rate) + z[0];
  double dmu = (hyper_.gamma_shape - 1.0) / mu - hyper_.gamma_rate;

  for (std::size_t k = 0; k < kNumFields; ++k) {
    const auto& d = data_.fields[k];
    const double zk = z[1 + k];
    const double s = sigmoid(zk);
    const double one_minus_s = sigmoid(-zk);
    const double alpha = d.alpha_max * s;
    const double dalpha_dz = d.alpha_max * s * one_minus_s;

    // Truncated normal prior.
    const double a = -mu / sd;
    const double b = (d.alpha_max - mu) / sd;
    const double log_mass = log_normal_interval(a, b);
    lp += normal_logpdf(alpha, mu, sd) - log_mass;
    const double dlogmass_dmu =
        (std::exp(log_phi(a) - log_mass) - std::exp(log_phi(b) - log_mass)) / sd;
    dmu += (alpha - mu) / var - dlogmass_dmu;
    double dz = -(alpha - mu) / var * dalpha_dz;

    // Jacobian of the scaled sigmoid.
    lp += std::log(d.alpha_max) + log_sigmoid(zk) + log_sigmoid(-zk);
    dz += one_minus_s - s;

    const Term like = field_likelihood(d, zk);
    lp += like.value;
    dz += like.dz;
    grad[1 + k] = dz;
  }
  lp += log_choose_total_;
  grad[0] = dmu * mu + 1.0;
  return lp;
}

std::array<double, BiasModel::kDim> BiasModel::to_output(std::span<const double> z) const {
  const auto p = constrain(z);
  std::array<double, kDim> out{};
  out[0] = p.mu;
  for (std::size_t k = 0; k < kNumFields; ++k) out[1 + k] = p.alpha[k];
  return out;
}

// SingleFieldModel

SingleFieldModel::SingleFieldModel(FieldData data, double mu, Hyper hyper)
    : data_(std::move(data)), mu_(mu), hyper_(hyper) {
  if (!(data_.alpha_max > 0)) throw std::invalid_argument("SingleFieldModel: bad alpha_max");
  log_choose_total_ = sum_log_choose(data_);
}

double SingleFieldModel::log_posterior_alpha(double alpha) const {
  if (!(alpha > 0 && alpha < data_.alpha_max)) return kNegInf;
  double lp = normal_logpdf(alpha, mu_, hyper_.alpha_sd);
  for (std::size_t i = 0; i < data_.trials.size(); ++i) {
    const double theta = alpha * data_.ratio[i];
    if (data_.trials[i] > data_.female[i] && !(theta < 1)) return kNegInf;
    lp += binomial_logpmf(data_.female[i], data_.trials[i], theta);
  }
  return lp;
}

double SingleFieldModel::alpha(double z) const noexcept { return data_.alpha_max * sigmoid(z); }

double SingleFieldModel::log_density(double z) const {
  double g = 0;
  return log_density_gradient(z, g);
}

double SingleFieldModel::log_density_gradient(double z, double& grad) const {
  const double s = sigmoid(z);
  const double one_minus_s = sigmoid(-z);
  const double alpha = data_.alpha_max * s;
  const double var = hyper_.alpha_sd * hyper_.alpha_sd;
  const Term like = field_likelihood(data_, z);
  grad = -(alpha - mu_) / var * data_.alpha_max * s * one_minus_s + (one_minus_s - s) + like.dz;
  return normal_logpdf(alpha, mu_, hyper_.alpha_sd) + std::log(data_.alpha_max) + log_sigmoid(z) +
         log_sigmoid(-z) + like.value + log_choose_total_;
}

}  // namespace lagbias
