#pragma once
// Convergence diagnostics: rank-normalized split R-hat and bulk effective
// sample size (Vehtari, Gelman, Simpson, Carpenter & Buerkner 2021).

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "lagbias/hmc.hpp"

namespace lagbias {

struct Diagnostics {
  std::vector<double> rhat;  // per parameter
  std::vector<double> ess;   // per parameter
  int divergences = 0;
};

using ChainSet = std::vector<std::vector<double>>;

// Maps every draw to a standard-normal score of its pooled rank (average
// ranks for ties).
ChainSet rank_normalize(const ChainSet& chains);

// Classic split R-hat on the given values (no rank normalization).
double split_rhat_raw(const ChainSet& chains);

// max(bulk, tail) rank-normalized split R-hat. Identical constant draws give 1.
double split_rhat(const ChainSet& chains);

// Bulk ESS from rank-normalized split chains with Geyer's initial monotone
// sequence; capped at the total number of draws. Zero-variance input gives 1.
double effective_sample_size(const ChainSet& chains);

// Requires >= 2 chains with >= 4 draws each.
Diagnostics compute_diagnostics(const PosteriorDraws& draws);

}  // namespace lagbias
