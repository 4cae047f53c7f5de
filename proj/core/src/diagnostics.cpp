#include "lagbias/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

namespace lagbias {

namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Splits each chain into two halves; the middle draw of an odd chain is dropped.
ChainSet split_chains(const ChainSet& chains) {
  ChainSet out;
  out.reserve(2 * chains.size());
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2));
  return 0.5 * (lo + hi);
}

bool all_identical(const ChainSet& chains) {
  const double first = chains.front().front();
  for (const auto& c : chains)
    for (double x : c)
      if (x != first) return false;
  return true;
}

// Autocovariance at lags 0..n-1, normalized by n.
std::vector<double> autocovariance(const std::vector<double>& x) {
  const std::size_t n = x.size();
  const double m = mean(x);
  std::vector<double> centred(n);
  for (std::size_t i = 0; i < n; ++i) centred[i] = x[i] - m;
  std::vector<double> acov(n, 0.0);
  for (std::size_t lag = 0; lag < n; ++lag) {
    double s = 0;
    for (std::size_t i = 0; i + lag < n; ++i) s += centred[i] * centred[i + lag];
    acov[lag] = s / static_cast<double>(n);
  }
  return acov;
}

double ess_raw(const ChainSet& chains) {
  const std::size_t m = chains.size();
  std::size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());

  std::vector<std::vector<double>> acov(m);
  std::vector<double> chain_mean(m), chain_var(m);
  for (std::size_t c = 0; c < m; ++c) {
    std::vector<double> x(chains[c].begin(), chains[c].begin() + static_cast<std::ptrdiff_t>(n));
    acov[c] = autocovariance(x);
    chain_mean[c] = mean(x);
    chain_var[c] = acov[c][0] * static_cast<double>(n) / static_cast<double>(n - 1);
  }
  const double mean_var = mean(chain_var);
  double var_plus = mean_var * static_cast<double>(n - 1) / static_cast<double>(n);
  if (m > 1) var_plus += sample_variance(chain_mean);
  const double total = static_cast<double>(m * n);
  if (!(var_plus > 0)) return 1.0;

  auto mean_acov = [&](std::size_t t) {
    double s = 0;
    for (std::size_t c = 0; c < m; ++c) s += acov[c][t];
    return s / static_cast<double>(m);
  };

  std::vector<double> rho(n, 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
  rho[1] = rho_odd;
  std::size_t t = 1;
  while (t < n - 5 && rho_even + rho_odd > 0) {
    rho_even = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - mean_acov(t + 2)) / var_plus;
    if (rho_even + rho_odd >= 0) {
      rho[t + 1] = rho_even;
      rho[t + 2] = rho_odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  // Negative last odd autocorrelation would inflate ESS (antithetic chains).
  if (rho_even > 0) rho[max_t + 1 < n ? max_t + 1 : max_t] = rho_even;

  // Initial monotone sequence.
  for (std::size_t k = 1; k + 2 <= max_t; k += 2) {
    const double prev = rho[k - 1] + rho[k];
    if (rho[k + 1] + rho[k + 2] > prev) {
      rho[k + 1] = prev / 2.0;
      rho[k + 2] = prev / 2.0;
    }
  }
  double sum = 0;
  for (std::size_t k = 0; k <= max_t && k < n; ++k) sum += rho[k];
  const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / std::log10(total));
  return std::min(total / tau, total);
}

}  // namespace

ChainSet rank_normalize(const ChainSet& chains) {
  struct Entry {
    double value;
    std::size_t chain, index;
  };
  std::vector<Entry> all;
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (std::size_t i = 0; i < chains[c].size(); ++i) all.push_back({chains[c][i], c, i});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });

  const double s = static_cast<double>(all.size());
  const boost::math::normal_distribution<double> standard;
  ChainSet out(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) out[c].resize(chains[c].size());

  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j + 1 < all.size() && all[j + 1].value == all[i].value) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;  // average 1-based rank
    const double z = boost::math::quantile(standard, (rank - 0.375) / (s + 0.25));
    for (std::size_t k = i; k <= j; ++k) out[all[k].chain][all[k].index] = z;
    i = j + 1;
  }
  return out;
}

double split_rhat_raw(const ChainSet& chains) {
  const auto split = split_chains(chains);
  const std::size_t n = split.front().size();
  if (n < 2) throw std::invalid_argument("split_rhat: chains too short");
  std::vector<double> means, vars;
  for (const auto& c : split) {
    means.push_back(mean(c));
    vars.push_back(sample_variance(c));
  }
  const double w = mean(vars);
  const double b_over_n = sample_variance(means);
  if (!(w > 0)) return b_over_n > 0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * w + b_over_n;
  return std::sqrt(var_plus / w);
}

double split_rhat(const ChainSet& chains) {
  if (all_identical(chains)) return 1.0;
  const double bulk = split_rhat_raw(rank_normalize(chains));

  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  const double med = median(pooled);
  ChainSet folded = chains;
  for (auto& c : folded)
    for (auto& x : c) x = std::abs(x - med);
  const double tail = all_identical(folded) ? 1.0 : split_rhat_raw(rank_normalize(folded));
  return std::max(bulk, tail);
}

double effective_sample_size(const ChainSet& chains) {
  if (all_identical(chains)) return 1.0;
  return ess_raw(split_chains(rank_normalize(chains)));
}

Diagnostics compute_diagnostics(const PosteriorDraws& draws) {
  if (draws.n_chains < 2) {
    throw std::invalid_argument(
        "diagnostics need at least 2 chains; rerun the sampler with --chains 2 or more");
  }
  if (draws.n_draws < 4) throw std::invalid_argument("diagnostics need at least 4 draws per chain");
  Diagnostics d;
  for (std::size_t k = 0; k < draws.dim; ++k) {
    const auto chains = draws.per_chain(k);
    d.rhat.push_back(split_rhat(chains));
    d.ess.push_back(effective_sample_size(chains));
  }
  d.divergences = draws.total_divergences();
  return d;
}

}  // namespace lagbias
