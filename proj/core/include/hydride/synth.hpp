#pragma once

#include <cstdint>
#include <vector>

#include "hydride/causal.hpp"
#include "hydride/dataset.hpp"
#include "hydride/rng.hpp"

namespace hydride::synth {

/// Deterministic metal-hydride dataset for demos and tests. Every record
/// carries a structure, passes the training criteria, and scores are the
/// original-variant storage score computed from its own fields. Density is
/// mass over cell volume, so the columns carry real dependencies for the
/// causal and regression stages.
std::vector<dataset::MaterialRecord> hydride_dataset(int n, std::uint64_t seed);

/// Linear-Gaussian structural equation model over nodes 0..size-1 with
/// edges i -> j restricted to i < j.
struct Sem {
  int size = 0;
  std::vector<std::vector<double>> coef;  // coef[j][i] weight of i -> j
  std::vector<double> noise_sd;

  bool edge(int i, int j) const { return coef[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] != 0.0; }
};

/// Random DAG with the given edge probability and coefficient magnitudes in
/// [coef_lo, coef_hi] with random sign.
Sem random_sem(int nodes, double edge_prob, Rng& rng, double coef_lo = 0.5,
               double coef_hi = 1.5);

/// Chain x0 -> x1 -> ... ; collider x0 -> x2 <- x1 available via explicit
/// coefficient setup.
Sem chain_sem(int nodes);
Sem collider_sem();  // 3 nodes: 0 -> 2 <- 1

causal::Table sample_sem(const Sem& sem, int rows, Rng& rng,
                         const std::vector<std::string>& names = {});

}  // namespace hydride::synth
