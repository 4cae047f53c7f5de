#pragma once
// Hamiltonian Monte Carlo with an identity mass matrix, a jittered fixed
// number of leapfrog steps, and dual-averaging step-size adaptation during
// warmup.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lagbias {

// Returns log p(z) and writes d log p / dz into grad.
using LogDensityFn = std::function<double(std::span<const double> z, std::span<double> grad)>;
// Maps an unconstrained point to the values that get stored as a draw.
using OutputFn = std::function<void(std::span<const double> z, std::span<double> out)>;

struct Target {
  std::size_t dim = 0;
  LogDensityFn log_density;
  // Empty: store z itself.
  OutputFn to_output;
  std::size_t output_dim = 0;  // 0: same as dim
  std::vector<std::string> names;
};

struct HmcConfig {
  int n_chains = 4;
  int n_warmup = 1000;
  int n_draws = 2000;
  double target_accept = 0.8;
  int leapfrog_steps = 32;
  double step_jitter = 0.5;  // steps drawn uniformly from leapfrog_steps * (1 +/- jitter)
  double max_energy_error = 1000.0;  // |dH| above this is a divergence
  std::uint64_t seed = 1;
  bool parallel_chains = false;

  // Throws std::invalid_argument on a bad configuration.
  void validate() const;
};

struct PhasePoint {
  std::vector<double> position;
  std::vector<double> momentum;
  std::vector<double> gradient;  // of log density at position
  double log_density = 0;
};

// Standard position-momentum leapfrog. Returns false as soon as the log
// density or gradient becomes non-finite (a divergence); the state is then
// left at the failing point.
bool leapfrog(const LogDensityFn& logp, PhasePoint& state, double step_size, int n_steps);

double kinetic_energy(std::span<const double> momentum) noexcept;
inline double hamiltonian(const PhasePoint& s) noexcept {
  return -s.log_density + kinetic_energy(s.momentum);
}

// Nesterov dual averaging on log step size (Hoffman & Gelman defaults).
class DualAveraging {
 public:
  DualAveraging(double initial_step, double target_accept, double gamma = 0.05, double t0 = 10.0,
                double kappa = 0.75);

  // Feeds one acceptance probability, returns the step size for the next iteration.
  double update(double accept_prob);

  double step_size() const noexcept;
  // Averaged iterate; used after warmup.
  double final_step_size() const noexcept;
  int iterations() const noexcept { return count_; }

 private:
  double target_;
  double gamma_, t0_, kappa_;
  double shrink_point_;  // log(10 * initial_step)
  double h_bar_ = 0;
  double log_step_;
  double log_step_bar_ = 0;
  int count_ = 0;
};

struct PosteriorDraws {
  std::size_t n_chains = 0;
  std::size_t n_draws = 0;
  std::size_t dim = 0;
  std::vector<std::string> names;
  std::vector<double> values;  // [chain][draw][param], row-major
  std::vector<double> accept_rate;  // per chain, post-warmup mean acceptance probability
  std::vector<int> divergences;  // per chain, post-warmup
  std::vector<double> step_size;  // per chain, adapted

  double at(std::size_t chain, std::size_t draw, std::size_t param) const {
    return values[(chain * n_draws + draw) * dim + param];
  }
  // One parameter, pooled over chains in chain order.
  std::vector<double> pooled(std::size_t param) const;
  // One parameter, one vector per chain.
  std::vector<std::vector<double>> per_chain(std::size_t param) const;
  int total_divergences() const noexcept;
};

class SamplerError : public std::runtime_error {
 public:
  SamplerError(int chain, const std::string& what)
      : std::runtime_error("chain " + std::to_string(chain) + ": " + what), chain_(chain) {}
  int chain() const noexcept { return chain_; }

 private:
  int chain_;
};

// Runs config.n_chains independent chains. Chain c draws its randomness from
// derive_seed(config.seed, c), so serial and parallel runs are identical.
// `init`, when non-empty, is the starting point of every chain; otherwise each
// chain starts from standard-normal jitter around the origin.
PosteriorDraws sample(const Target& target, const HmcConfig& config,
                      std::span<const double> init = {});

}  // namespace lagbias
