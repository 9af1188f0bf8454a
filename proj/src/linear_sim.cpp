#include "modgen/linear_sim.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace modgen {

namespace {

struct TrialLosses {
  double train = 0.0;
  double test = 0.0;
};

// one draw of (W, X, X_test): fit min-norm head on the first q feature
// columns, evaluate squared-error losses per sample
TrialLosses run_trial(const LinearSimConfig& cfg, long body, RngStream rng) {
  long dn = long(cfg.d) * cfg.n;
  long width = cfg.P;
  if (cfg.spectrum.tabulated()) width = std::min<long>(width, cfg.spectrum.table.size());
  long total = body + width;
  long q = body + cfg.p;

  Eigen::VectorXd w(total);
  for (long i = 0; i < body; ++i) w[i] = rng.normal();
  for (long i = 0; i < width; ++i)
    w[body + i] = rng.normal() * std::sqrt(cfg.spectrum.lambda(i + 1));

  double noise_std =
      cfg.tail_compensation ? std::sqrt(cfg.spectrum.trace_tail(width)) : 0.0;

  Eigen::MatrixXd phi = rng.normal_mat(dn, total);
  Eigen::VectorXd y = phi * w;
  if (noise_std > 0)
    for (long i = 0; i < dn; ++i) y[i] += noise_std * rng.normal();

  Eigen::VectorXd theta = min_norm_lstsq(phi.leftCols(q), y);

  TrialLosses out;
  out.train = (phi.leftCols(q) * theta - y).squaredNorm() / double(cfg.n);

  long rows_t = long(cfg.d) * cfg.n_test;
  Eigen::MatrixXd phi_t = rng.normal_mat(rows_t, total);
  Eigen::VectorXd y_t = phi_t * w;
  if (noise_std > 0)
    for (long i = 0; i < rows_t; ++i) y_t[i] += noise_std * rng.normal();
  out.test = (phi_t.leftCols(q) * theta - y_t).squaredNorm() / double(cfg.n_test);
  return out;
}

SimResult run_all(const LinearSimConfig& cfg, long body, RngStream rng,
                  int threads) {
  if (cfg.n < 1 || cfg.p < 1 || cfg.d < 1 || cfg.trials < 1 || cfg.n_test < 1)
    throw std::invalid_argument("simulate: counts must be >= 1");
  long width = cfg.P;
  if (cfg.spectrum.tabulated()) width = std::min<long>(width, cfg.spectrum.table.size());
  if (cfg.p > width)
    throw std::invalid_argument("simulate: p exceeds sampled feature width");

  std::vector<TrialLosses> slots(cfg.trials);
  auto worker = [&](int lo, int hi) {
    for (int t = lo; t < hi; ++t) slots[t] = run_trial(cfg, body, rng.substream(t));
  };
  if (threads <= 1) {
    worker(0, cfg.trials);
  } else {
    std::vector<std::thread> pool;
    int per = (cfg.trials + threads - 1) / threads;
    for (int k = 0; k < threads; ++k) {
      int lo = k * per, hi = std::min(cfg.trials, (k + 1) * per);
      if (lo < hi) pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<double> tr(cfg.trials), te(cfg.trials);
  for (int t = 0; t < cfg.trials; ++t) {
    tr[t] = slots[t].train;
    te[t] = slots[t].test;
  }
  SimResult res;
  res.train = mean_se(tr);
  res.test = mean_se(te);
  res.trials = cfg.trials;
  return res;
}

}  // namespace

SimResult simulate_monolithic(const LinearSimConfig& cfg, RngStream rng,
                              int threads) {
  return run_all(cfg, 0, rng, threads);
}

SimResult simulate_modular(const LinearSimConfig& cfg, RngStream rng,
                           int threads) {
  if (cfg.m < 0 || cfg.b < 1)
    throw std::invalid_argument("simulate_modular: m >= 0, b >= 1");
  return run_all(cfg, cfg.m * cfg.b, rng, threads);
}

}  // namespace modgen
