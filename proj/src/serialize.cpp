#include "modgen/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace modgen {

namespace {

constexpr char kMagic[4] = {'M', 'G', 'N', 'B'};

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
}

Eigen::MatrixXd read_matrix(std::ifstream& in, long rows, long cols,
                            const std::string& path) {
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) {
      double v;
      if (!in.read(reinterpret_cast<char*>(&v), sizeof(double)))
        throw std::runtime_error("load_bundle: truncated payload in " + path);
      m(i, j) = v;
    }
  return m;
}

}  // namespace

void save_bundle(const std::string& path, const Bundle& bundle) {
  Json header = bundle.header;
  Json tens = Json::array();
  for (const auto& [name, m] : bundle.tensors)
    tens.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  header["tensors"] = tens;
  std::string htext = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_bundle: cannot open " + path);
  out.write(kMagic, 4);
  std::uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), long(htext.size()));
  for (const auto& [name, m] : bundle.tensors) write_matrix(out, m);
  if (!out) throw std::runtime_error("save_bundle: write failed for " + path);
}

Bundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_bundle: cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_bundle: bad magic in " + path);
  std::uint64_t hlen = 0;
  if (!in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen)))
    throw std::runtime_error("load_bundle: truncated header in " + path);
  std::string htext(hlen, '\0');
  if (!in.read(htext.data(), long(hlen)))
    throw std::runtime_error("load_bundle: truncated header in " + path);
  Bundle b;
  b.header = Json::parse(htext);
  for (const auto& t : b.header.at("tensors")) {
    long rows = t.at("rows"), cols = t.at("cols");
    b.tensors.emplace_back(t.at("name").get<std::string>(),
                           read_matrix(in, rows, cols, path));
  }
  return b;
}

std::string bundle_kind(const std::string& path) {
  Bundle b = load_bundle(path);
  return b.header.value("kind", "unknown");
}

namespace {

void push_mlp_tensors(Bundle& b, const Mlp& model, const std::string& prefix) {
  for (size_t l = 0; l < model.layers.size(); ++l) {
    b.tensors.emplace_back(prefix + "W" + std::to_string(l), model.layers[l].W);
    b.tensors.emplace_back(prefix + "b" + std::to_string(l), model.layers[l].b);
  }
  for (size_t l = 0; l < model.bn.size(); ++l) {
    const auto& s = model.bn[l];
    b.tensors.emplace_back(prefix + "bn_gamma" + std::to_string(l), s.gamma);
    b.tensors.emplace_back(prefix + "bn_beta" + std::to_string(l), s.beta);
    b.tensors.emplace_back(prefix + "bn_rmean" + std::to_string(l), s.run_mean);
    b.tensors.emplace_back(prefix + "bn_rvar" + std::to_string(l), s.run_var);
  }
}

Json mlp_arch(const Mlp& model) {
  Json sizes = Json::array();
  sizes.push_back(model.in_dim());
  for (const auto& l : model.layers) sizes.push_back(l.W.cols());
  return {{"layer_sizes", sizes}, {"batchnorm", model.batchnorm}};
}

Mlp mlp_from_tensors(const Json& arch,
                     const std::vector<std::pair<std::string, Eigen::MatrixXd>>& ts,
                     size_t& pos) {
  std::vector<int> sizes = arch.at("layer_sizes").get<std::vector<int>>();
  RngStream dummy(0);
  Mlp model = init_mlp(dummy, sizes, arch.at("batchnorm").get<bool>());
  for (auto& l : model.layers) {
    l.W = ts.at(pos++).second;
    l.b = ts.at(pos++).second;
  }
  for (auto& s : model.bn) {
    s.gamma = ts.at(pos++).second;
    s.beta = ts.at(pos++).second;
    s.run_mean = ts.at(pos++).second;
    s.run_var = ts.at(pos++).second;
  }
  return model;
}

}  // namespace

void save_mlp(const std::string& path, const Mlp& model, Json extra) {
  Bundle b;
  b.header = std::move(extra);
  b.header["kind"] = "mlp";
  b.header["arch"] = mlp_arch(model);
  push_mlp_tensors(b, model, "");
  save_bundle(path, b);
}

Mlp load_mlp(const std::string& path, Json* header) {
  Bundle b = load_bundle(path);
  if (b.header.value("kind", "") != "mlp")
    throw std::runtime_error("load_mlp: " + path + " is not an mlp checkpoint");
  size_t pos = 0;
  Mlp model = mlp_from_tensors(b.header.at("arch"), b.tensors, pos);
  if (header) *header = b.header;
  return model;
}

void save_modular(const std::string& path, const ModularNet& model, Json extra) {
  Bundle b;
  b.header = std::move(extra);
  b.header["kind"] = "modular";
  b.header["mode"] =
      model.mode == ModularMode::RegressionSum ? "regression-sum"
                                               : "classification-concat";
  b.header["nonlinear_proj"] = model.nonlinear_proj;
  b.header["shared_bodies"] = model.shared_bodies;
  b.header["K"] = model.K;
  Json bodies = Json::array();
  for (const auto& body : model.bodies) bodies.push_back(mlp_arch(body));
  b.header["bodies"] = bodies;
  b.header["has_head"] = model.head.W.size() > 0;
  for (size_t j = 0; j < model.proj.size(); ++j)
    b.tensors.emplace_back("proj" + std::to_string(j), model.proj[j]);
  for (size_t j = 0; j < model.bodies.size(); ++j)
    push_mlp_tensors(b, model.bodies[j], "body" + std::to_string(j) + "_");
  if (model.head.W.size()) {
    b.tensors.emplace_back("headW", model.head.W);
    b.tensors.emplace_back("headb", model.head.b);
  }
  save_bundle(path, b);
}

ModularNet load_modular(const std::string& path, Json* header) {
  Bundle b = load_bundle(path);
  if (b.header.value("kind", "") != "modular")
    throw std::runtime_error("load_modular: " + path + " is not a modular checkpoint");
  ModularNet model;
  model.mode = b.header.at("mode") == "regression-sum"
                   ? ModularMode::RegressionSum
                   : ModularMode::ClassificationConcat;
  model.nonlinear_proj = b.header.at("nonlinear_proj");
  model.shared_bodies = b.header.at("shared_bodies");
  model.K = b.header.at("K");
  size_t pos = 0;
  for (int j = 0; j < model.K; ++j) model.proj.push_back(b.tensors.at(pos++).second);
  for (const auto& arch : b.header.at("bodies"))
    model.bodies.push_back(mlp_from_tensors(arch, b.tensors, pos));
  if (b.header.at("has_head").get<bool>()) {
    model.head.W = b.tensors.at(pos++).second;
    model.head.b = b.tensors.at(pos++).second;
  }
  if (header) *header = b.header;
  return model;
}

void save_projections(const std::string& path, const std::vector<KernelSpec>& specs,
                      Json extra) {
  Bundle b;
  b.header = std::move(extra);
  b.header["kind"] = "projections";
  b.header["count"] = specs.size();
  Json meta = Json::array();
  for (size_t j = 0; j < specs.size(); ++j) {
    const auto& s = specs[j];
    std::string kind = s.kind == KernelKind::SineLinear    ? "sine-linear"
                       : s.kind == KernelKind::RbfProjection ? "rbf-projection"
                                                             : "distance";
    meta.push_back({{"kernel", kind}, {"sigma", s.sigma}});
    std::string p = "m" + std::to_string(j) + "_";
    if (s.u.size()) b.tensors.emplace_back(p + "u", s.u);
    if (s.v.size()) b.tensors.emplace_back(p + "v", s.v);
    if (s.U.size()) b.tensors.emplace_back(p + "U", s.U);
  }
  b.header["specs"] = meta;
  save_bundle(path, b);
}

std::vector<KernelSpec> load_projections(const std::string& path, Json* header) {
  Bundle b = load_bundle(path);
  if (b.header.value("kind", "") != "projections")
    throw std::runtime_error("load_projections: " + path +
                             " is not a projections checkpoint");
  std::vector<KernelSpec> specs;
  size_t pos = 0;
  for (const auto& meta : b.header.at("specs")) {
    KernelSpec s;
    std::string kind = meta.at("kernel");
    s.kind = kind == "sine-linear"      ? KernelKind::SineLinear
             : kind == "rbf-projection" ? KernelKind::RbfProjection
                                        : KernelKind::Distance;
    s.sigma = meta.at("sigma");
    if (s.kind == KernelKind::SineLinear) {
      s.u = b.tensors.at(pos++).second;
      s.v = b.tensors.at(pos++).second;
    } else if (s.kind == KernelKind::Distance) {
      s.u = b.tensors.at(pos++).second;
    } else {
      s.U = b.tensors.at(pos++).second;
    }
    specs.push_back(std::move(s));
  }
  if (header) *header = b.header;
  return specs;
}

void save_dataset(const std::string& path, const Eigen::MatrixXd& X,
                  const Eigen::MatrixXd& Y, Json extra) {
  Bundle b;
  b.header = std::move(extra);
  b.header["kind"] = "dataset";
  b.tensors.emplace_back("X", X);
  b.tensors.emplace_back("Y", Y);
  save_bundle(path, b);
}

void load_dataset(const std::string& path, Eigen::MatrixXd& X, Eigen::MatrixXd& Y,
                  Json* header) {
  Bundle b = load_bundle(path);
  if (b.header.value("kind", "") != "dataset")
    throw std::runtime_error("load_dataset: " + path + " is not a dataset");
  X = b.tensors.at(0).second;
  Y = b.tensors.at(1).second;
  if (header) *header = b.header;
}

}  // namespace modgen
