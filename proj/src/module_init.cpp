#include "modgen/module_init.hpp"

#include <cmath>
#include <stdexcept>

namespace modgen {

namespace {

KernelSpec random_init(const KernelSpec& tmpl, long in_dim, const InitConfig& cfg,
                       RngStream& rng) {
  KernelSpec spec = tmpl;
  switch (tmpl.kind) {
    case KernelKind::SineLinear:
      spec.u = rng.unit_sphere(in_dim);
      spec.v = rng.unit_sphere(in_dim);
      break;
    case KernelKind::Distance:
      spec.u = rng.unit_sphere(in_dim);
      break;
    case KernelKind::RbfProjection:
      spec.U = rng.normal_mat(in_dim, cfg.proj_dim, 0.0,
                              1.0 / std::sqrt(double(in_dim)));
      break;
  }
  return spec;
}

}  // namespace

InitResult find_module_projection(const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& Y,
                                  const KernelSpec& spec_template,
                                  const InitConfig& cfg, RngStream& rng) {
  long n = X.rows();
  if (n == 0) throw std::invalid_argument("find_module_projection: empty dataset");
  if (cfg.batch_size > n)
    throw std::invalid_argument("find_module_projection: batch_size > n");
  InitResult res;
  res.spec = random_init(spec_template, X.cols(), cfg, rng);
  res.loss_trace.reserve(cfg.iters);

  Eigen::MatrixXd Xb(cfg.batch_size, X.cols());
  Eigen::VectorXd yb(cfg.batch_size);
  for (long it = 0; it < cfg.iters; ++it) {
    std::vector<int> idx = rng.sample_without_replacement(int(n), cfg.batch_size);
    long col = 0;
    if (cfg.class_slice && Y.cols() > 1) col = rng.uniform_int(Y.cols());
    for (int i = 0; i < cfg.batch_size; ++i) {
      Xb.row(i) = X.row(idx[i]);
      yb[i] = Y(idx[i], col);
    }
    if (res.spec.kind == KernelKind::SineLinear &&
        std::abs(res.spec.v.dot(res.spec.u)) < 1e-9) {
      res.spec.v = rng.unit_sphere(X.cols());
      res.degenerate_resets += 1;
    }
    KernelGrads g = kernel_loss_grad(res.spec, Xb, yb, cfg.jitter);
    res.loss_trace.push_back(g.loss);
    switch (res.spec.kind) {
      case KernelKind::SineLinear:
        res.spec.u -= cfg.lr * g.du;
        res.spec.v -= cfg.lr * g.dv;
        break;
      case KernelKind::Distance:
        res.spec.u -= cfg.lr * g.du;
        break;
      case KernelKind::RbfProjection:
        res.spec.U -= cfg.lr * g.dU;
        break;
    }
  }
  return res;
}

std::vector<InitResult> init_all_modules(const Eigen::MatrixXd& X,
                                         const Eigen::MatrixXd& Y,
                                         const KernelSpec& spec_template,
                                         const InitConfig& cfg, RngStream& rng) {
  if (cfg.K_modules < 1)
    throw std::invalid_argument("init_all_modules: K_modules >= 1");
  std::vector<InitResult> out;
  out.reserve(cfg.K_modules);
  for (int j = 0; j < cfg.K_modules; ++j) {
    RngStream sub = rng.substream(j);
    out.push_back(find_module_projection(X, Y, spec_template, cfg, sub));
  }
  return out;
}

}  // namespace modgen
