#pragma once

#include "modgen/numerics.hpp"
#include "modgen/rng.hpp"
#include "modgen/spectrum.hpp"

namespace modgen {

// Monte Carlo of the min-norm linear model on sampled Gaussian features.
// Features are truncated at width P; the unsampled tail is emulated exactly by
// adding Gaussian target noise with variance trace_tail(P), which is the only
// way the tail enters the expected losses.
struct LinearSimConfig {
  SpectrumSpec spectrum;
  long n = 100;
  long p = 50;
  int d = 1;
  long m = 0;   // modular runs: module count (0 selects the monolithic path)
  long b = 0;   // modular runs: bottleneck dim per module (= spectrum.dim)
  long P = 2000;
  int trials = 200;
  int n_test = 256;
  bool tail_compensation = true;
};

struct SimResult {
  MeanSe train;
  MeanSe test;
  int trials = 0;
};

SimResult simulate_monolithic(const LinearSimConfig& cfg, RngStream rng,
                              int threads = 1);
SimResult simulate_modular(const LinearSimConfig& cfg, RngStream rng,
                           int threads = 1);

}  // namespace modgen
