#include "modgen/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace modgen {

long Mlp::param_count() const {
  long n = 0;
  for (const auto& l : layers) n += l.W.size() + l.b.size();
  for (const auto& s : bn) n += s.gamma.size() + s.beta.size();
  return n;
}

long ModularNet::param_count() const {
  long n = 0;
  for (const auto& p : proj) n += p.size();
  for (const auto& b : bodies) n += b.param_count();
  n += head.W.size() + head.b.size();
  return n;
}

Mlp init_mlp(RngStream& rng, const std::vector<int>& layer_sizes, bool batchnorm) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("init_mlp: need at least input and output sizes");
  Mlp model;
  model.batchnorm = batchnorm;
  int n_layers = int(layer_sizes.size()) - 1;
  for (int l = 0; l < n_layers; ++l) {
    int fan_in = layer_sizes[l], fan_out = layer_sizes[l + 1];
    DenseLayer layer;
    layer.W = rng.normal_mat(fan_in, fan_out, 0.0, 1.0 / std::sqrt(double(fan_in)));
    layer.b = Eigen::VectorXd::Zero(fan_out);
    model.layers.push_back(std::move(layer));
    if (batchnorm && l + 1 < n_layers) {
      BatchNorm s;
      s.gamma = Eigen::VectorXd::Ones(fan_out);
      s.beta = Eigen::VectorXd::Zero(fan_out);
      s.run_mean = Eigen::VectorXd::Zero(fan_out);
      s.run_var = Eigen::VectorXd::Ones(fan_out);
      model.bn.push_back(std::move(s));
    }
  }
  return model;
}

Mlp zero_like(const Mlp& model) {
  Mlp z = model;
  for (auto& l : z.layers) {
    l.W.setZero();
    l.b.setZero();
  }
  for (auto& s : z.bn) {
    s.gamma.setZero();
    s.beta.setZero();
    s.run_mean.setZero();
    s.run_var.setZero();
  }
  return z;
}

Eigen::MatrixXd mlp_forward(Mlp& model, const Eigen::MatrixXd& X, bool train_mode,
                            MlpCache* cache) {
  if (X.cols() != model.in_dim())
    throw std::invalid_argument("mlp_forward: input width mismatch");
  int n_layers = int(model.layers.size());
  if (cache) {
    cache->input.assign(n_layers, {});
    cache->xhat.assign(n_layers, {});
    cache->inv_std.assign(n_layers, {});
    cache->relu_in.assign(n_layers, {});
  }
  Eigen::MatrixXd h = X;
  double batch = double(X.rows());
  for (int l = 0; l < n_layers; ++l) {
    if (cache) cache->input[l] = h;
    Eigen::MatrixXd z = h * model.layers[l].W;
    z.rowwise() += model.layers[l].b.transpose();
    bool last = l + 1 == n_layers;
    if (last) {
      h = std::move(z);
      break;
    }
    if (model.batchnorm) {
      BatchNorm& s = model.bn[l];
      Eigen::MatrixXd xhat;
      Eigen::VectorXd inv_std;
      if (train_mode) {
        Eigen::VectorXd mu = z.colwise().mean();
        Eigen::MatrixXd centered = z.rowwise() - mu.transpose();
        Eigen::VectorXd var = centered.array().square().colwise().sum() / batch;
        inv_std = (var.array() + s.eps).rsqrt();
        xhat = centered.array().rowwise() * inv_std.transpose().array();
        s.run_mean = s.momentum * s.run_mean + (1.0 - s.momentum) * mu;
        s.run_var = s.momentum * s.run_var + (1.0 - s.momentum) * var;
      } else {
        inv_std = (s.run_var.array() + s.eps).rsqrt();
        xhat = (z.rowwise() - s.run_mean.transpose()).array().rowwise() *
               inv_std.transpose().array();
      }
      z = xhat.array().rowwise() * s.gamma.transpose().array();
      z.rowwise() += s.beta.transpose();
      if (cache) {
        cache->xhat[l] = std::move(xhat);
        cache->inv_std[l] = std::move(inv_std);
      }
    }
    if (cache) cache->relu_in[l] = z;
    h = z.cwiseMax(0.0);
  }
  return h;
}

Eigen::MatrixXd mlp_forward(const Mlp& model, const Eigen::MatrixXd& X) {
  return mlp_forward(const_cast<Mlp&>(model), X, false, nullptr);
}

Eigen::MatrixXd mlp_backward(const Mlp& model, const MlpCache& cache,
                             const Eigen::MatrixXd& dY, Mlp& grads) {
  int n_layers = int(model.layers.size());
  Eigen::MatrixXd d = dY;
  for (int l = n_layers - 1; l >= 0; --l) {
    bool last = l + 1 == n_layers;
    if (!last) {
      d = (cache.relu_in[l].array() > 0.0).cast<double>() * d.array();
      if (model.batchnorm) {
        const BatchNorm& s = model.bn[l];
        const Eigen::MatrixXd& xhat = cache.xhat[l];
        double batch = double(d.rows());
        grads.bn[l].gamma += (d.array() * xhat.array()).colwise().sum().matrix();
        grads.bn[l].beta += d.colwise().sum();
        Eigen::MatrixXd dxhat = d.array().rowwise() * s.gamma.transpose().array();
        Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
        Eigen::RowVectorXd sum_dx =
            (dxhat.array() * xhat.array()).colwise().sum();
        d = ((dxhat * batch).rowwise() - sum_d).array() -
            xhat.array().rowwise() * sum_dx.array();
        d = d.array().rowwise() *
            (cache.inv_std[l].transpose().array() / batch);
      }
    }
    grads.layers[l].W += cache.input[l].transpose() * d;
    grads.layers[l].b += d.colwise().sum();
    d = d * model.layers[l].W.transpose();
  }
  return d;
}

ModularNet init_modular_regression(RngStream& rng, int K, int in_dim,
                                   const std::vector<int>& hidden, bool nonlinear) {
  ModularNet net;
  net.mode = ModularMode::RegressionSum;
  net.nonlinear_proj = nonlinear;
  net.K = K;
  std::vector<int> sizes;
  sizes.push_back(1);
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(1);
  for (int j = 0; j < K; ++j) {
    net.proj.push_back(rng.unit_sphere(in_dim));
    net.bodies.push_back(init_mlp(rng, sizes, false));
  }
  return net;
}

ModularNet init_modular_classification(RngStream& rng, int K, int in_dim,
                                       int proj_dim, const std::vector<int>& hidden,
                                       int out_dim, bool batchnorm, bool shared) {
  if (hidden.empty())
    throw std::invalid_argument("init_modular_classification: need hidden layers");
  ModularNet net;
  net.mode = ModularMode::ClassificationConcat;
  net.shared_bodies = shared;
  net.K = K;
  std::vector<int> sizes;
  sizes.push_back(proj_dim);
  for (int h : hidden) sizes.push_back(h);
  for (int j = 0; j < K; ++j)
    net.proj.push_back(
        rng.normal_mat(in_dim, proj_dim, 0.0, 1.0 / std::sqrt(double(in_dim))));
  int n_bodies = shared ? 1 : K;
  for (int j = 0; j < n_bodies; ++j) net.bodies.push_back(init_mlp(rng, sizes, batchnorm));
  int concat_dim = K * hidden.back();
  net.head.W = rng.normal_mat(concat_dim, out_dim, 0.0,
                              1.0 / std::sqrt(double(concat_dim)));
  net.head.b = Eigen::VectorXd::Zero(out_dim);
  return net;
}

ModularNet zero_like(const ModularNet& model) {
  ModularNet z = model;
  for (auto& p : z.proj) p.setZero();
  for (size_t j = 0; j < z.bodies.size(); ++j) z.bodies[j] = zero_like(model.bodies[j]);
  z.head.W.setZero();
  z.head.b.setZero();
  return z;
}

namespace {

Eigen::MatrixXd project_input(const ModularNet& model, int j,
                              const Eigen::MatrixXd& X) {
  if (model.mode == ModularMode::RegressionSum && model.nonlinear_proj)
    return (X.rowwise() - model.proj[j].col(0).transpose()).rowwise().norm();
  return X * model.proj[j];
}

}  // namespace

Eigen::MatrixXd modular_forward(ModularNet& model, const Eigen::MatrixXd& X,
                                bool train_mode, ModularCache* cache) {
  if (cache) {
    cache->s.assign(model.K, {});
    cache->bodies.assign(model.K, {});
    cache->body_out.assign(model.K, {});
  }
  long n = X.rows();
  if (model.mode == ModularMode::RegressionSum) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, 1);
    double scale = 1.0 / std::sqrt(double(model.K));
    for (int j = 0; j < model.K; ++j) {
      Eigen::MatrixXd s = project_input(model, j, X);
      Eigen::MatrixXd o = mlp_forward(model.body(j), s, train_mode,
                                      cache ? &cache->bodies[j] : nullptr);
      out += o;
      if (cache) {
        cache->s[j] = std::move(s);
        cache->body_out[j] = std::move(o);
      }
    }
    return out * scale;
  }
  int h_out = model.body(0).out_dim();
  Eigen::MatrixXd concat(n, long(model.K) * h_out);
  for (int j = 0; j < model.K; ++j) {
    Eigen::MatrixXd s = project_input(model, j, X);
    Eigen::MatrixXd o = mlp_forward(model.body(j), s, train_mode,
                                    cache ? &cache->bodies[j] : nullptr);
    concat.middleCols(long(j) * h_out, h_out) = o;
    if (cache) cache->s[j] = std::move(s);
  }
  Eigen::MatrixXd out = concat * model.head.W;
  out.rowwise() += model.head.b.transpose();
  if (cache) cache->concat = std::move(concat);
  return out;
}

Eigen::MatrixXd modular_forward(const ModularNet& model, const Eigen::MatrixXd& X) {
  return modular_forward(const_cast<ModularNet&>(model), X, false, nullptr);
}

void modular_backward(const ModularNet& model, const Eigen::MatrixXd& X,
                      const ModularCache& cache, const Eigen::MatrixXd& dY,
                      ModularNet& grads, bool train_projections) {
  if (model.mode == ModularMode::RegressionSum) {
    double scale = 1.0 / std::sqrt(double(model.K));
    for (int j = 0; j < model.K; ++j) {
      Eigen::MatrixXd ds = mlp_backward(model.body(j), cache.bodies[j], dY * scale,
                                        grads.body(j));
      if (!train_projections) continue;
      if (model.nonlinear_proj) {
        // s = ||u - x|| per row, ds/du = (u - x)/s
        Eigen::MatrixXd diff =
            (-X).rowwise() + model.proj[j].col(0).transpose();
        for (long i = 0; i < X.rows(); ++i) {
          double s = cache.s[j](i, 0);
          if (s > 1e-12) grads.proj[j] += (ds(i, 0) / s) * diff.row(i).transpose();
        }
      } else {
        grads.proj[j] += X.transpose() * ds;
      }
    }
    return;
  }
  grads.head.W += cache.concat.transpose() * dY;
  grads.head.b += dY.colwise().sum();
  Eigen::MatrixXd dconcat = dY * model.head.W.transpose();
  int h_out = model.body(0).out_dim();
  for (int j = 0; j < model.K; ++j) {
    Eigen::MatrixXd ds = mlp_backward(model.body(j), cache.bodies[j],
                                      dconcat.middleCols(long(j) * h_out, h_out),
                                      grads.body(j));
    if (train_projections) grads.proj[j] += X.transpose() * ds;
  }
}

LossGrad loss_and_dpred(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& Y,
                        LossKind kind) {
  if (pred.rows() != Y.rows() || pred.cols() != Y.cols())
    throw std::invalid_argument("loss: shape mismatch");
  LossGrad out;
  double n = double(pred.rows());
  if (kind == LossKind::Mse) {
    Eigen::MatrixXd r = pred - Y;
    out.loss = r.squaredNorm() / n;
    out.dpred = 2.0 * r / n;
    return out;
  }
  if (pred.cols() % 10 != 0)
    throw std::invalid_argument("loss: block softmax needs widths of 10");
  int blocks = int(pred.cols()) / 10;
  out.dpred.resize(pred.rows(), pred.cols());
  double total = 0.0;
  for (int bkt = 0; bkt < blocks; ++bkt) {
    Eigen::MatrixXd logits = pred.middleCols(bkt * 10, 10);
    Eigen::VectorXd mx = logits.rowwise().maxCoeff();
    Eigen::MatrixXd ex = (logits.colwise() - mx).array().exp();
    Eigen::VectorXd z = ex.rowwise().sum();
    Eigen::MatrixXd p = ex.array().colwise() / z.array();
    const auto& t = Y.middleCols(bkt * 10, 10);
    total += -((p.array().log() * t.array()).sum());
    out.dpred.middleCols(bkt * 10, 10) = (p - t) / (n * blocks);
  }
  out.loss = total / (n * blocks);
  return out;
}

double mlp_loss_and_grad(Mlp& model, const Eigen::MatrixXd& X,
                         const Eigen::MatrixXd& Y, LossKind kind, Mlp& grads,
                         bool train_mode) {
  MlpCache cache;
  Eigen::MatrixXd pred = mlp_forward(model, X, train_mode, &cache);
  LossGrad lg = loss_and_dpred(pred, Y, kind);
  mlp_backward(model, cache, lg.dpred, grads);
  return lg.loss;
}

double modular_loss_and_grad(ModularNet& model, const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& Y, LossKind kind,
                             ModularNet& grads, bool train_projections,
                             bool train_mode) {
  ModularCache cache;
  Eigen::MatrixXd pred = modular_forward(model, X, train_mode, &cache);
  LossGrad lg = loss_and_dpred(pred, Y, kind);
  modular_backward(model, X, cache, lg.dpred, grads, train_projections);
  return lg.loss;
}

namespace {

void collect(Mlp& model, std::vector<TensorView>& out) {
  for (auto& l : model.layers) {
    out.push_back({l.W.data(), l.W.size()});
    out.push_back({l.b.data(), l.b.size()});
  }
  for (auto& s : model.bn) {
    out.push_back({s.gamma.data(), s.gamma.size()});
    out.push_back({s.beta.data(), s.beta.size()});
  }
}

void collect(ModularNet& model, std::vector<TensorView>& out) {
  for (auto& p : model.proj) out.push_back({p.data(), p.size()});
  for (auto& b : model.bodies) collect(b, out);
  if (model.head.W.size()) {
    out.push_back({model.head.W.data(), model.head.W.size()});
    out.push_back({model.head.b.data(), model.head.b.size()});
  }
}

}  // namespace

std::vector<TensorView> param_views(Mlp& model) {
  std::vector<TensorView> out;
  collect(model, out);
  return out;
}

std::vector<TensorView> param_views(ModularNet& model) {
  std::vector<TensorView> out;
  collect(model, out);
  return out;
}

std::vector<TensorView> param_views(const Mlp& model) {
  return param_views(const_cast<Mlp&>(model));
}

std::vector<TensorView> param_views(const ModularNet& model) {
  return param_views(const_cast<ModularNet&>(model));
}

AdamState init_adam(const std::vector<TensorView>& params) {
  AdamState st;
  for (const auto& p : params) {
    st.m.push_back(Eigen::ArrayXd::Zero(p.size));
    st.v.push_back(Eigen::ArrayXd::Zero(p.size));
  }
  return st;
}

void adam_step(AdamState& state, const AdamHyper& hyper,
               const std::vector<TensorView>& params,
               const std::vector<TensorView>& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: state/param mismatch");
  state.t += 1;
  double bc1 = 1.0 - std::pow(hyper.beta1, double(state.t));
  double bc2 = 1.0 - std::pow(hyper.beta2, double(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    Eigen::Map<Eigen::ArrayXd> w(params[i].data, params[i].size);
    Eigen::Map<const Eigen::ArrayXd> g(grads[i].data, grads[i].size);
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g.square();
    w -= hyper.lr * (state.m[i] / bc1) / ((state.v[i] / bc2).sqrt() + hyper.eps);
  }
}

namespace {

template <typename Model, typename LossFn>
TrainResult train_loop(Model& model, long n, const TrainConfig& cfg,
                       RngStream& rng, LossFn&& step) {
  TrainResult res;
  std::vector<TensorView> params = param_views(model);
  AdamState adam = init_adam(params);
  AdamHyper hyper;
  hyper.lr = cfg.lr;
  Model grads = zero_like(model);
  std::vector<TensorView> gviews = param_views(grads);

  int bs = int(std::min<long>(cfg.batch_size, n));
  std::vector<int> order;
  long total_steps = cfg.iterations;
  if (cfg.epochs_mode) {
    order.resize(n);
    for (long i = 0; i < n; ++i) order[i] = int(i);
    long per_epoch = (n + bs - 1) / bs;
    total_steps = per_epoch * cfg.epochs;
  }

  std::vector<int> batch;
  for (long it = 0; it < total_steps; ++it) {
    if (cfg.epochs_mode) {
      long per_epoch = (n + bs - 1) / bs;
      long pos = it % per_epoch;
      if (pos == 0) rng.shuffle(order);
      long lo = pos * bs, hi = std::min<long>(n, lo + bs);
      batch.assign(order.begin() + lo, order.begin() + hi);
    } else {
      batch = rng.sample_without_replacement(int(n), bs);
    }
    for (auto& g : gviews)
      Eigen::Map<Eigen::ArrayXd>(g.data, g.size).setZero();
    double loss = step(batch, grads);
    if (!std::isfinite(loss) || loss > cfg.diverge_abort) {
      res.diverged = true;
      res.final_loss = loss;
      res.steps = it;
      return res;
    }
    if (cfg.lr != 0.0) adam_step(adam, hyper, params, gviews);
    if (cfg.record_every > 0 && it % cfg.record_every == 0)
      res.loss_trace.push_back(loss);
    res.final_loss = loss;
  }
  res.steps = total_steps;
  return res;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X, const std::vector<int>& idx) {
  Eigen::MatrixXd out(long(idx.size()), X.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(i) = X.row(idx[i]);
  return out;
}

}  // namespace

TrainResult train_mlp(Mlp& model, const Eigen::MatrixXd& X,
                      const Eigen::MatrixXd& Y, const TrainConfig& cfg,
                      RngStream& rng) {
  if (X.rows() == 0) throw std::invalid_argument("train_mlp: empty dataset");
  return train_loop(model, X.rows(), cfg, rng,
                    [&](const std::vector<int>& batch, Mlp& grads) {
                      return mlp_loss_and_grad(model, gather_rows(X, batch),
                                               gather_rows(Y, batch), cfg.loss,
                                               grads, true);
                    });
}

TrainResult train_modular(ModularNet& model, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& Y, const TrainConfig& cfg,
                          RngStream& rng) {
  if (X.rows() == 0) throw std::invalid_argument("train_modular: empty dataset");
  return train_loop(model, X.rows(), cfg, rng,
                    [&](const std::vector<int>& batch, ModularNet& grads) {
                      return modular_loss_and_grad(
                          model, gather_rows(X, batch), gather_rows(Y, batch),
                          cfg.loss, grads, cfg.train_projections, true);
                    });
}

double metric_of(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& Y,
                 Metric metric) {
  if (metric == Metric::Mse)
    return (pred - Y).squaredNorm() / double(pred.rows());
  if (pred.cols() % 10 != 0)
    throw std::invalid_argument("metric: per-component accuracy needs 10-wide blocks");
  int blocks = int(pred.cols()) / 10;
  long correct = 0;
  for (long i = 0; i < pred.rows(); ++i) {
    for (int bkt = 0; bkt < blocks; ++bkt) {
      Eigen::Index pi, ti;
      pred.row(i).segment(bkt * 10, 10).maxCoeff(&pi);
      Y.row(i).segment(bkt * 10, 10).maxCoeff(&ti);
      if (pi == ti) ++correct;
    }
  }
  return double(correct) / (double(pred.rows()) * blocks);
}

double evaluate(const Mlp& model, const Eigen::MatrixXd& X,
                const Eigen::MatrixXd& Y, Metric metric) {
  return metric_of(mlp_forward(model, X), Y, metric);
}

double evaluate(const ModularNet& model, const Eigen::MatrixXd& X,
                const Eigen::MatrixXd& Y, Metric metric) {
  return metric_of(modular_forward(model, X), Y, metric);
}

}  // namespace modgen
