#pragma once

#include <functional>
#include <vector>

#include "modgen/rng.hpp"
#include "modgen/spectrum.hpp"

namespace modgen {

struct LossPair {
  double train = 0.0;
  double test = 0.0;
};

// closed form min(n,p)/(|n-p|-1); requires |n-p| >= 2 (real-valued p allowed)
double f_closed(double n, double p);

// Monte Carlo E||pinv(R)||_F^2 over standard-Gaussian n x p draws;
// median of means over 20 groups tames the heavy tail near n = p
double f_mc(long n, long p, RngStream& rng, int trials = 10000,
            bool median_of_means = true);

// dispatcher: 0 on an empty side, closed form at |n-p| >= 2, MC otherwise
double f_np(long n, long p, RngStream* rng = nullptr, int trials = 10000);

// expected losses of the min-norm linear model on the power-law spectrum;
// spectrum.dim is the task input dimension
LossPair monolithic_losses(const SpectrumSpec& spectrum, long n, long p, int d,
                           RngStream* rng = nullptr, int f_trials = 10000);

// modular variant: m modules of bottleneck dim b contribute an m*b identity
// block ahead of the power-law spectrum (spectrum.dim = b); requires p > m*b
LossPair modular_losses(const SpectrumSpec& spectrum, long n, long p, int d,
                        long m, long b, RngStream* rng = nullptr,
                        int f_trials = 10000);

// real-valued-p evaluation used by the parameter fit; the F denominator is
// guarded below by 0.5 so near-square configs stay finite
LossPair monolithic_losses_real(const SpectrumSpec& spectrum, double n, double p,
                                int d);

struct SampleComplexityResult {
  long n = -1;
  bool reachable = false;
};

// smallest integer n with curve(n) <= eps, searching n = 1 and then the
// monotone region n >= p/d + 1 past the interpolation spike
SampleComplexityResult invert_sample_complexity(
    const std::function<double(long)>& curve, double eps, long p, int d,
    long n_cap = 100000000L);

struct FitObservation {
  int m = 1;
  double p_prime = 1.0;  // raw parameter count; effective p = alpha * p_prime
  long n = 1;
  int d = 1;
  double train = 0.0;
  double test = 0.0;
};

struct FitResult {
  double c = 0.0;
  double omega = 0.0;
  double alpha = 0.0;
  double objective = 0.0;
};

FitResult fit_theory_params(const std::vector<FitObservation>& obs,
                            int grid_points = 20, int refine_sweeps = 40);

}  // namespace modgen
