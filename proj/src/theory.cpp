#include "modgen/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "modgen/numerics.hpp"

namespace modgen {

double f_closed(double n, double p) {
  if (n <= 0 || p <= 0) return 0.0;
  double gap = std::abs(n - p);
  if (gap < 2.0) throw std::invalid_argument("f_closed: |n-p| must be >= 2");
  return std::min(n, p) / (gap - 1.0);
}

double f_mc(long n, long p, RngStream& rng, int trials, bool median_of_means) {
  if (n <= 0 || p <= 0) return 0.0;
  std::vector<double> vals(trials);
  for (int t = 0; t < trials; ++t) {
    RngStream sub = rng.substream(t);
    Eigen::MatrixXd R = sub.normal_mat(n, p);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(R);
    const auto& sv = svd.singularValues();
    double cutoff = 1e-10 * sv(0);
    double s = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > cutoff) s += 1.0 / (sv[i] * sv[i]);
    vals[t] = s;
  }
  if (!median_of_means) {
    KahanSum s;
    for (double v : vals) s.add(v);
    return s.value() / double(trials);
  }
  int groups = std::min(20, trials);
  std::vector<double> means(groups, 0.0);
  std::vector<int> counts(groups, 0);
  for (int t = 0; t < trials; ++t) {
    means[t % groups] += vals[t];
    counts[t % groups] += 1;
  }
  for (int g = 0; g < groups; ++g) means[g] /= double(counts[g]);
  std::sort(means.begin(), means.end());
  if (groups % 2 == 1) return means[groups / 2];
  return 0.5 * (means[groups / 2 - 1] + means[groups / 2]);
}

double f_np(long n, long p, RngStream* rng, int trials) {
  if (n <= 0 || p <= 0) return 0.0;
  if (std::labs(n - p) >= 2) return f_closed(double(n), double(p));
  if (!rng) throw std::invalid_argument("f_np: near-square case needs an RngStream");
  return f_mc(n, p, *rng, trials, true);
}

LossPair monolithic_losses(const SpectrumSpec& spectrum, long n, long p, int d,
                           RngStream* rng, int f_trials) {
  if (p < 1 || d < 1) throw std::invalid_argument("monolithic_losses: p, d >= 1");
  if (n < 0) throw std::invalid_argument("monolithic_losses: n >= 0");
  long dn = long(d) * n;
  double t2 = spectrum.trace_tail(p);
  double t1 = spectrum.trace_head(p);
  double tr = spectrum.total_trace();
  double mn = double(std::min(dn, p));
  double f = f_np(dn, p, rng, f_trials);
  LossPair out;
  out.test = d * t2 * f - d * (mn / double(p)) * t1 + d * tr;
  out.train = n > 0 ? (double(dn) - mn) / double(n) * t2 : 0.0;
  return out;
}

LossPair modular_losses(const SpectrumSpec& spectrum, long n, long p, int d,
                        long m, long b, RngStream* rng, int f_trials) {
  if (p < 1 || d < 1 || m < 1 || b < 1)
    throw std::invalid_argument("modular_losses: p, d, m, b >= 1");
  if (p <= m * b) throw std::domain_error("modular_losses: requires p > m*b");
  long dn = long(d) * n;
  double mb = double(m) * double(b);
  double t2 = spectrum.trace_tail(p);
  double tr = spectrum.total_trace();
  double mn = double(std::min(dn, p));
  double f = f_np(dn, p, rng, f_trials);
  LossPair out;
  out.test = d * f * t2 - d * (mn / double(p)) * (mb + tr - t2) + d * mb + d * tr;
  out.train = n > 0 ? (double(dn) - mn) / double(n) * t2 : 0.0;
  return out;
}

LossPair monolithic_losses_real(const SpectrumSpec& spectrum, double n, double p,
                                int d) {
  double dn = double(d) * n;
  double e = spectrum.exponent();
  double t2 = spectrum.c * std::pow(p + 1.0, -e);
  double tr = spectrum.c;
  double t1 = tr - t2;
  double mn = std::min(dn, p);
  double f = (dn <= 0 || p <= 0)
                 ? 0.0
                 : mn / std::max(std::abs(dn - p) - 1.0, 0.5);
  LossPair out;
  out.test = d * t2 * f - d * (mn / p) * t1 + d * tr;
  out.train = n > 0 ? (dn - mn) / n * t2 : 0.0;
  return out;
}

SampleComplexityResult invert_sample_complexity(
    const std::function<double(long)>& curve, double eps, long p, int d,
    long n_cap) {
  SampleComplexityResult res;
  if (curve(1) <= eps) {
    res.n = 1;
    res.reachable = true;
    return res;
  }
  long lo = p / d + 1;
  if (lo < 2) lo = 2;
  if (curve(n_cap) > eps) return res;
  if (curve(lo) <= eps) {
    res.n = lo;
    res.reachable = true;
    return res;
  }
  long hi = n_cap;
  // curve is monotone decreasing on [lo, cap]; find first n with curve <= eps
  while (hi - lo > 1) {
    long mid = lo + (hi - lo) / 2;
    if (curve(mid) <= eps)
      hi = mid;
    else
      lo = mid;
  }
  res.n = hi;
  res.reachable = true;
  return res;
}

namespace {

double fit_objective(const std::vector<FitObservation>& obs, double c,
                     double omega, double alpha) {
  KahanSum s;
  for (const auto& o : obs) {
    SpectrumSpec sp{c, omega, o.m, {}};
    LossPair pred = monolithic_losses_real(sp, double(o.n), alpha * o.p_prime, o.d);
    double dt = std::log1p(std::max(pred.test, 0.0)) - std::log1p(std::max(o.test, 0.0));
    double dr = std::log1p(std::max(pred.train, 0.0)) - std::log1p(std::max(o.train, 0.0));
    s.add(dt * dt + dr * dr);
  }
  return s.value() / double(obs.size());
}

}  // namespace

FitResult fit_theory_params(const std::vector<FitObservation>& obs,
                            int grid_points, int refine_sweeps) {
  if (obs.size() < 3)
    throw std::invalid_argument("fit_theory_params: need >= 3 observations");
  bool degenerate = true;
  for (size_t i = 1; i < obs.size(); ++i) {
    if (obs[i].m != obs[0].m || obs[i].p_prime != obs[0].p_prime ||
        obs[i].n != obs[0].n) {
      degenerate = false;
      break;
    }
  }
  if (degenerate)
    throw std::invalid_argument("fit_theory_params: observations are all identical");

  const double c_lo = 0.1, c_hi = 5.0;
  const double w_lo = 1.05, w_hi = 3.0;
  const double a_lo = 0.1, a_hi = 2.0;
  double best_c = c_lo, best_w = w_lo, best_a = a_lo;
  double best = std::numeric_limits<double>::infinity();
  for (int ic = 0; ic < grid_points; ++ic) {
    double c = c_lo + (c_hi - c_lo) * ic / double(grid_points - 1);
    for (int iw = 0; iw < grid_points; ++iw) {
      double w = w_lo + (w_hi - w_lo) * iw / double(grid_points - 1);
      for (int ia = 0; ia < grid_points; ++ia) {
        double a = a_lo + (a_hi - a_lo) * ia / double(grid_points - 1);
        double v = fit_objective(obs, c, w, a);
        if (v < best) {
          best = v;
          best_c = c;
          best_w = w;
          best_a = a;
        }
      }
    }
  }

  double step_c = (c_hi - c_lo) / double(grid_points - 1);
  double step_w = (w_hi - w_lo) / double(grid_points - 1);
  double step_a = (a_hi - a_lo) / double(grid_points - 1);
  for (int sweep = 0; sweep < refine_sweeps; ++sweep) {
    bool moved = false;
    for (int axis = 0; axis < 3; ++axis) {
      double* var = axis == 0 ? &best_c : axis == 1 ? &best_w : &best_a;
      double step = axis == 0 ? step_c : axis == 1 ? step_w : step_a;
      double lo = axis == 0 ? c_lo : axis == 1 ? w_lo : a_lo;
      double hi = axis == 0 ? c_hi : axis == 1 ? w_hi : a_hi;
      for (double sgn : {-1.0, 1.0}) {
        double cand = std::clamp(*var + sgn * step, lo, hi);
        double c = axis == 0 ? cand : best_c;
        double w = axis == 1 ? cand : best_w;
        double a = axis == 2 ? cand : best_a;
        double v = fit_objective(obs, c, w, a);
        if (v < best) {
          best = v;
          *var = cand;
          moved = true;
        }
      }
    }
    if (!moved) {
      step_c *= 0.5;
      step_w *= 0.5;
      step_a *= 0.5;
      if (step_c < 1e-6 && step_w < 1e-6 && step_a < 1e-6) break;
    }
  }
  return {best_c, best_w, best_a, best};
}

}  // namespace modgen
