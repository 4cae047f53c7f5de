#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lagbias/diagnostics.hpp"
#include "lagbias/rng.hpp"

namespace lagbias {
namespace {

ChainSet iid_chains(std::size_t chains, std::size_t draws, std::uint64_t seed,
                    std::vector<double> offsets = {}) {
  Rng rng(seed);
  ChainSet out(chains, std::vector<double>(draws));
  for (std::size_t c = 0; c < chains; ++c)
    for (auto& x : out[c]) x = rng.normal() + (offsets.empty() ? 0.0 : offsets[c]);
  return out;
}

// AR(1) with coefficient phi: ESS/N -> (1 - phi) / (1 + phi).
ChainSet ar1_chains(std::size_t chains, std::size_t draws, double phi, std::uint64_t seed) {
  Rng rng(seed);
  ChainSet out(chains, std::vector<double>(draws));
  for (auto& chain : out) {
    double x = rng.normal() / std::sqrt(1 - phi * phi);
    for (auto& v : chain) {
      x = phi * x + rng.normal();
      v = x;
    }
  }
  return out;
}

TEST(Rhat, IidChainsNearOne) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const double r = split_rhat(iid_chains(4, 1000, seed));
    EXPECT_GE(r, 0.99);
    EXPECT_LE(r, 1.01);
  }
}

TEST(Rhat, DisjointChainsFlagged) {
  const double r = split_rhat(iid_chains(4, 500, 1, {0.0, 10.0, 20.0, 30.0}));
  EXPECT_GT(r, 2.0);
}

TEST(Rhat, DetectsScaleDifferenceThroughTail) {
  auto chains = iid_chains(4, 1000, 2);
  for (auto& x : chains[0]) x *= 6.0;
  EXPECT_GT(split_rhat(chains), split_rhat_raw(chains));
  EXPECT_GT(split_rhat(chains), 1.01);
}

TEST(Rhat, ConstantDrawsGiveOne) {
  const ChainSet c(4, std::vector<double>(100, 2.5));
  EXPECT_DOUBLE_EQ(split_rhat(c), 1.0);
  EXPECT_DOUBLE_EQ(effective_sample_size(c), 1.0);
}

TEST(Ess, IidCloseToDrawCount) {
  const double ess = effective_sample_size(iid_chains(4, 1000, 3));
  EXPECT_GT(ess, 3400.0);
  EXPECT_LE(ess, 4000.0);
}

TEST(Ess, AutocorrelatedMatchesTheory) {
  const double phi = 0.9;
  const double ess = effective_sample_size(ar1_chains(4, 5000, phi, 4));
  const double expected = 20000.0 * (1 - phi) / (1 + phi);
  EXPECT_NEAR(ess / expected, 1.0, 0.2);
}

TEST(Ess, StuckChainIsSmall) {
  auto chains = ar1_chains(4, 1000, 0.999, 5);
  EXPECT_LT(effective_sample_size(chains), 100.0);
}

TEST(RankNormalize, PreservesOrderAndShape) {
  const ChainSet c{{3.0, 1.0, 2.0}, {10.0, -4.0, 2.0}};
  const auto z = rank_normalize(c);
  ASSERT_EQ(z.size(), 2u);
  EXPECT_LT(z[0][1], z[0][2]);
  EXPECT_LT(z[0][2], z[0][0]);
  EXPECT_LT(z[1][1], z[0][1]);
  EXPECT_DOUBLE_EQ(z[0][2], z[1][2]);  // tied values share the average rank
  EXPECT_GT(z[1][0], 0.0);
}

TEST(ComputeDiagnostics, NeedsTwoChains) {
  PosteriorDraws d;
  d.n_chains = 1;
  d.n_draws = 100;
  d.dim = 1;
  d.values.assign(100, 0.0);
  d.divergences = {0};
  try {
    compute_diagnostics(d);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("--chains"), std::string::npos);
  }
}

TEST(ComputeDiagnostics, PerParameterAndDivergences) {
  PosteriorDraws d;
  d.n_chains = 4;
  d.n_draws = 500;
  d.dim = 2;
  Rng rng(6);
  for (std::size_t i = 0; i < 4 * 500 * 2; ++i) d.values.push_back(rng.normal());
  d.divergences = {0, 2, 1, 0};
  const auto diag = compute_diagnostics(d);
  ASSERT_EQ(diag.rhat.size(), 2u);
  ASSERT_EQ(diag.ess.size(), 2u);
  EXPECT_EQ(diag.divergences, 3);
  for (double r : diag.rhat) EXPECT_LT(r, 1.01);
}

}  // namespace
}  // namespace lagbias
