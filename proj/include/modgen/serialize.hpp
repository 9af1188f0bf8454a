#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "modgen/kernels.hpp"
#include "modgen/nn.hpp"

namespace modgen {

using Json = nlohmann::json;

// container: magic "MGNB", u64 header length, JSON header, named row-major
// little-endian f64 tensors concatenated in header order
struct Bundle {
  Json header;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;
};

void save_bundle(const std::string& path, const Bundle& bundle);
Bundle load_bundle(const std::string& path);

void save_mlp(const std::string& path, const Mlp& model, Json extra = Json::object());
Mlp load_mlp(const std::string& path, Json* header = nullptr);

void save_modular(const std::string& path, const ModularNet& model,
                  Json extra = Json::object());
ModularNet load_modular(const std::string& path, Json* header = nullptr);

void save_projections(const std::string& path, const std::vector<KernelSpec>& specs,
                      Json extra = Json::object());
std::vector<KernelSpec> load_projections(const std::string& path,
                                         Json* header = nullptr);

void save_dataset(const std::string& path, const Eigen::MatrixXd& X,
                  const Eigen::MatrixXd& Y, Json extra = Json::object());
void load_dataset(const std::string& path, Eigen::MatrixXd& X, Eigen::MatrixXd& Y,
                  Json* header = nullptr);

// checkpoint kind sniffing ("mlp", "modular", "projections", "dataset", ...)
std::string bundle_kind(const std::string& path);

}  // namespace modgen
