#include "lagbias/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "lagbias/rng.hpp"

namespace lagbias {

namespace {

constexpr int kAbortWindow = 100;
constexpr double kAbortAcceptance = 0.01;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool evaluate(const LogDensityFn& logp, PhasePoint& s) {
  s.log_density = logp(s.position, s.gradient);
  return std::isfinite(s.log_density) && all_finite(s.gradient);
}

void draw_momentum(Rng& rng, std::vector<double>& p) {
  for (auto& x : p) x = rng.normal();
}

// Heuristic from Hoffman & Gelman: double or halve until the one-step
// acceptance ratio crosses 1/2.
double initial_step_size(const LogDensityFn& logp, const PhasePoint& start, Rng& rng) {
  double step = 1.0;
  PhasePoint trial = start;
  draw_momentum(rng, trial.momentum);
  const std::vector<double> momentum0 = trial.momentum;
  const double h0 = hamiltonian(trial);

  auto log_ratio = [&](double eps) {
    trial.position = start.position;
    trial.gradient = start.gradient;
    trial.log_density = start.log_density;
    trial.momentum = momentum0;
    if (!leapfrog(logp, trial, eps, 1)) return -std::numeric_limits<double>::infinity();
    const double dh = h0 - hamiltonian(trial);
    return std::isfinite(dh) ? dh : -std::numeric_limits<double>::infinity();
  };

  double lr = log_ratio(step);
  const double direction = lr > std::log(0.5) ? 1.0 : -1.0;
  for (int i = 0; i < 60; ++i) {
    if (direction * lr <= -direction * std::log(2.0)) break;
    step *= std::pow(2.0, direction);
    lr = log_ratio(step);
  }
  return step;
}

struct ChainResult {
  std::vector<double> values;
  double accept_rate = 0;
  int divergences = 0;
  double step_size = 0;
};

ChainResult run_chain(const Target& target, const HmcConfig& cfg, int chain,
                      std::span<const double> init) {
  const std::size_t dim = target.dim;
  const std::size_t out_dim = target.output_dim ? target.output_dim : dim;
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(chain)));

  PhasePoint current;
  current.position.resize(dim);
  current.momentum.assign(dim, 0.0);
  current.gradient.assign(dim, 0.0);
  if (!init.empty()) {
    if (init.size() != dim) throw SamplerError(chain, "initial point has the wrong dimension");
    std::copy(init.begin(), init.end(), current.position.begin());
  } else {
    for (auto& x : current.position) x = rng.normal();
  }
  if (!evaluate(target.log_density, current)) {
    throw SamplerError(chain, "log density or gradient is not finite at the initial point");
  }

  DualAveraging adapt(initial_step_size(target.log_density, current, rng), cfg.target_accept);
  double step = adapt.step_size();

  const int lo_steps = std::max(1, static_cast<int>(std::lround(cfg.leapfrog_steps * (1.0 - cfg.step_jitter))));
  const int hi_steps = std::max(lo_steps, static_cast<int>(std::lround(cfg.leapfrog_steps * (1.0 + cfg.step_jitter))));

  ChainResult out;
  out.values.resize(static_cast<std::size_t>(cfg.n_draws) * out_dim);
  std::vector<double> warm_window;
  warm_window.reserve(kAbortWindow);
  double accept_sum = 0;
  PhasePoint proposal = current;

  const int total = cfg.n_warmup + cfg.n_draws;
  for (int iter = 0; iter < total; ++iter) {
    const bool warmup = iter < cfg.n_warmup;
    const int n_steps = rng.uniform_int(lo_steps, hi_steps);
    draw_momentum(rng, current.momentum);
    const double h0 = hamiltonian(current);

    proposal.position = current.position;
    proposal.momentum = current.momentum;
    proposal.gradient = current.gradient;
    proposal.log_density = current.log_density;
    const bool ok = leapfrog(target.log_density, proposal, step, n_steps);
    const double h1 = ok ? hamiltonian(proposal) : std::numeric_limits<double>::infinity();
    const double dh = h1 - h0;

    double accept_prob = 0;
    bool divergent = false;
    if (!ok || !std::isfinite(dh) || std::abs(dh) > cfg.max_energy_error) {
      divergent = true;
    } else {
      accept_prob = dh <= 0 ? 1.0 : std::exp(-dh);
    }
    const double u = rng.uniform();
    if (!divergent && u < accept_prob) std::swap(current, proposal);

    if (warmup) {
      step = adapt.update(accept_prob);
      if (iter >= cfg.n_warmup - kAbortWindow) warm_window.push_back(accept_prob);
      if (iter == cfg.n_warmup - 1) {
        const double mean_accept =
            std::accumulate(warm_window.begin(), warm_window.end(), 0.0) /
            static_cast<double>(warm_window.size());
        if (mean_accept < kAbortAcceptance) {
          throw SamplerError(chain, "warmup failed: mean acceptance " + std::to_string(mean_accept) +
                                        " over the final " + std::to_string(warm_window.size()) +
                                        " warmup iterations (step size " + std::to_string(step) +
                                        ")");
        }
        step = adapt.final_step_size();
      }
    } else {
      const auto d = static_cast<std::size_t>(iter - cfg.n_warmup);
      std::span<double> slot(out.values.data() + d * out_dim, out_dim);
      if (target.to_output) {
        target.to_output(current.position, slot);
      } else {
        std::copy(current.position.begin(), current.position.end(), slot.begin());
      }
      accept_sum += accept_prob;
      if (divergent) ++out.divergences;
    }
  }
  out.accept_rate = cfg.n_draws > 0 ? accept_sum / cfg.n_draws : 0.0;
  out.step_size = step;
  return out;
}

}  // namespace

void HmcConfig::validate() const {
  if (n_chains < 1) throw std::invalid_argument("n_chains must be >= 1");
  if (n_warmup < 0) throw std::invalid_argument("n_warmup must be >= 0");
  if (n_draws < 1) throw std::invalid_argument("n_draws must be >= 1");
  if (!(target_accept > 0 && target_accept < 1))
    throw std::invalid_argument("target_accept must lie in (0, 1)");
  if (leapfrog_steps < 1) throw std::invalid_argument("leapfrog_steps must be >= 1");
  if (!(step_jitter >= 0 && step_jitter < 1))
    throw std::invalid_argument("step_jitter must lie in [0, 1)");
}

double kinetic_energy(std::span<const double> momentum) noexcept {
  double k = 0;
  for (double p : momentum) k += p * p;
  return 0.5 * k;
}

bool leapfrog(const LogDensityFn& logp, PhasePoint& s, double step_size, int n_steps) {
  const std::size_t dim = s.position.size();
  for (int step = 0; step < n_steps; ++step) {
    for (std::size_t i = 0; i < dim; ++i) s.momentum[i] += 0.5 * step_size * s.gradient[i];
    for (std::size_t i = 0; i < dim; ++i) s.position[i] += step_size * s.momentum[i];
    if (!evaluate(logp, s)) return false;
    for (std::size_t i = 0; i < dim; ++i) s.momentum[i] += 0.5 * step_size * s.gradient[i];
  }
  return true;
}

DualAveraging::DualAveraging(double initial_step, double target_accept, double gamma, double t0,
                             double kappa)
    : target_(target_accept),
      gamma_(gamma),
      t0_(t0),
      kappa_(kappa),
      shrink_point_(std::log(10.0 * initial_step)),
      log_step_(std::log(initial_step)) {}

double DualAveraging::update(double accept_prob) {
  ++count_;
  const double t = count_;
  const double w = 1.0 / (t + t0_);
  h_bar_ = (1.0 - w) * h_bar_ + w * (target_ - accept_prob);
  log_step_ = shrink_point_ - std::sqrt(t) / gamma_ * h_bar_;
  const double eta = std::pow(t, -kappa_);
  log_step_bar_ = eta * log_step_ + (1.0 - eta) * log_step_bar_;
  return std::exp(log_step_);
}

double DualAveraging::step_size() const noexcept { return std::exp(log_step_); }

double DualAveraging::final_step_size() const noexcept {
  return count_ > 0 ? std::exp(log_step_bar_) : std::exp(log_step_);
}

std::vector<double> PosteriorDraws::pooled(std::size_t param) const {
  std::vector<double> out;
  out.reserve(n_chains * n_draws);
  for (std::size_t c = 0; c < n_chains; ++c)
    for (std::size_t d = 0; d < n_draws; ++d) out.push_back(at(c, d, param));
  return out;
}

std::vector<std::vector<double>> PosteriorDraws::per_chain(std::size_t param) const {
  std::vector<std::vector<double>> out(n_chains);
  for (std::size_t c = 0; c < n_chains; ++c) {
    out[c].reserve(n_draws);
    for (std::size_t d = 0; d < n_draws; ++d) out[c].push_back(at(c, d, param));
  }
  return out;
}

int PosteriorDraws::total_divergences() const noexcept {
  return std::accumulate(divergences.begin(), divergences.end(), 0);
}

PosteriorDraws sample(const Target& target, const HmcConfig& config, std::span<const double> init) {
  config.validate();
  if (target.dim == 0 || !target.log_density) throw std::invalid_argument("sample: empty target");

  const auto n_chains = static_cast<std::size_t>(config.n_chains);
  std::vector<ChainResult> results(n_chains);
  std::vector<std::exception_ptr> errors(n_chains);

  auto work = [&](std::size_t c) {
    try {
      results[c] = run_chain(target, config, static_cast<int>(c), init);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (config.parallel_chains && n_chains > 1) {
    std::vector<std::thread> threads;
    threads.reserve(n_chains);
    for (std::size_t c = 0; c < n_chains; ++c) threads.emplace_back(work, c);
    for (auto& t : threads) t.join();
  } else {
    for (std::size_t c = 0; c < n_chains; ++c) work(c);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  PosteriorDraws draws;
  draws.n_chains = n_chains;
  draws.n_draws = static_cast<std::size_t>(config.n_draws);
  draws.dim = target.output_dim ? target.output_dim : target.dim;
  draws.names = target.names;
  if (draws.names.size() != draws.dim) {
    draws.names.clear();
    for (std::size_t k = 0; k < draws.dim; ++k) draws.names.push_back("x" + std::to_string(k));
  }
  draws.values.reserve(n_chains * draws.n_draws * draws.dim);
  for (auto& r : results) {
    draws.values.insert(draws.values.end(), r.values.begin(), r.values.end());
    draws.accept_rate.push_back(r.accept_rate);
    draws.divergences.push_back(r.divergences);
    draws.step_size.push_back(r.step_size);
  }
  return draws;
}

}  // namespace lagbias
