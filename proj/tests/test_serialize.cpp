#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include <doctest.h>

#include "modgen/rng.hpp"
#include "modgen/serialize.hpp"

using namespace modgen;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/modgen-test-" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("bundle container round-trips header and tensors exactly") {
  TempFile f("bundle.bundle");
  RngStream rng(301);
  Bundle b;
  b.header = {{"kind", "scratch"}, {"note", 42}};
  b.tensors.push_back({"a", rng.normal_mat(3, 4)});
  b.tensors.push_back({"b", rng.normal_mat(1, 7)});
  save_bundle(f.path, b);

  Bundle r = load_bundle(f.path);
  CHECK(r.header["kind"] == "scratch");
  CHECK(r.header["note"] == 42);
  REQUIRE(r.tensors.size() == 2);
  CHECK(r.tensors[0].first == "a");
  CHECK(r.tensors[0].second == b.tensors[0].second);
  CHECK(r.tensors[1].first == "b");
  CHECK(r.tensors[1].second == b.tensors[1].second);
}

TEST_CASE("dense model checkpoints restore every parameter bit") {
  TempFile f("mlp.bundle");
  RngStream rng(302);
  Mlp model = init_mlp(rng, {4, 6, 5, 2}, true);
  model.bn[0].run_mean.setConstant(0.25);
  model.bn[1].run_var.setConstant(3.5);
  save_mlp(f.path, model, {{"seed", 302}});

  Json header;
  Mlp back = load_mlp(f.path, &header);
  CHECK(header["seed"] == 302);
  REQUIRE(back.layers.size() == model.layers.size());
  for (size_t i = 0; i < model.layers.size(); ++i) {
    CHECK(back.layers[i].W == model.layers[i].W);
    CHECK(back.layers[i].b == model.layers[i].b);
  }
  REQUIRE(back.batchnorm);
  REQUIRE(back.bn.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(back.bn[i].gamma == model.bn[i].gamma);
    CHECK(back.bn[i].beta == model.bn[i].beta);
    CHECK(back.bn[i].run_mean == model.bn[i].run_mean);
    CHECK(back.bn[i].run_var == model.bn[i].run_var);
  }
  Eigen::MatrixXd X = rng.normal_mat(6, 4);
  CHECK(mlp_forward(std::as_const(back), X) == mlp_forward(std::as_const(model), X));
}

TEST_CASE("modular checkpoints restore both network modes") {
  RngStream rng(303);
  Eigen::MatrixXd Xr = rng.normal_mat(5, 4);
  {
    TempFile f("modreg.bundle");
    ModularNet net = init_modular_regression(rng, 3, 4, {6}, true);
    save_modular(f.path, net);
    ModularNet back = load_modular(f.path);
    CHECK(back.K == 3);
    CHECK(back.nonlinear_proj);
    CHECK(back.mode == ModularMode::RegressionSum);
    CHECK(modular_forward(std::as_const(back), Xr) ==
          modular_forward(std::as_const(net), Xr));
  }
  {
    TempFile f("modcls.bundle");
    ModularNet net = init_modular_classification(rng, 2, 6, 3, {5}, 20, true, true);
    Eigen::MatrixXd Xc = rng.normal_mat(5, 6);
    save_modular(f.path, net);
    ModularNet back = load_modular(f.path);
    CHECK(back.shared_bodies);
    CHECK(back.mode == ModularMode::ClassificationConcat);
    CHECK(back.head.W == net.head.W);
    CHECK(modular_forward(std::as_const(back), Xc) ==
          modular_forward(std::as_const(net), Xc));
  }
}

TEST_CASE("projection lists round-trip all three kernel kinds") {
  TempFile f("proj.bundle");
  RngStream rng(304);
  std::vector<KernelSpec> specs(3);
  specs[0].kind = KernelKind::SineLinear;
  specs[0].sigma = 0.5;
  specs[0].u = rng.unit_sphere(5);
  specs[0].v = rng.unit_sphere(5);
  specs[1].kind = KernelKind::Distance;
  specs[1].sigma = 2.0;
  specs[1].u = rng.unit_sphere(5);
  specs[2].kind = KernelKind::RbfProjection;
  specs[2].sigma = 1.5;
  specs[2].U = rng.normal_mat(6, 2);
  save_projections(f.path, specs, {{"source", "test"}});

  Json header;
  std::vector<KernelSpec> back = load_projections(f.path, &header);
  CHECK(header["source"] == "test");
  REQUIRE(back.size() == 3);
  CHECK(back[0].kind == KernelKind::SineLinear);
  CHECK(back[0].sigma == 0.5);
  CHECK(back[0].u == specs[0].u);
  CHECK(back[0].v == specs[0].v);
  CHECK(back[1].kind == KernelKind::Distance);
  CHECK(back[1].u == specs[1].u);
  CHECK(back[2].kind == KernelKind::RbfProjection);
  CHECK(back[2].U == specs[2].U);
}

TEST_CASE("datasets round-trip with their metadata") {
  TempFile f("data.bundle");
  RngStream rng(305);
  Eigen::MatrixXd X = rng.normal_mat(9, 5);
  Eigen::MatrixXd Y = rng.normal_mat(9, 2);
  save_dataset(f.path, X, Y, {{"task", "sine"}, {"n", 9}});

  Eigen::MatrixXd Xb, Yb;
  Json header;
  load_dataset(f.path, Xb, Yb, &header);
  CHECK(Xb == X);
  CHECK(Yb == Y);
  CHECK(header["task"] == "sine");
  CHECK(header["n"] == 9);
}

TEST_CASE("bundle kinds are sniffable without full loads") {
  RngStream rng(306);
  TempFile fm("sniff-mlp.bundle"), fd("sniff-data.bundle"), fp("sniff-proj.bundle");
  save_mlp(fm.path, init_mlp(rng, {2, 3, 1}, false));
  save_dataset(fd.path, rng.normal_mat(2, 2), rng.normal_mat(2, 1));
  save_projections(fp.path, {});
  CHECK(bundle_kind(fm.path) == "mlp");
  CHECK(bundle_kind(fd.path) == "dataset");
  CHECK(bundle_kind(fp.path) == "projections");
}

TEST_CASE("corrupt checkpoints fail with the path in the message") {
  TempFile f("trunc.bundle");
  RngStream rng(307);
  save_dataset(f.path, rng.normal_mat(8, 4), rng.normal_mat(8, 1));
  std::ifstream in(f.path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  in.close();
  std::ofstream out(f.path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), long(bytes.size()) / 2);
  out.close();

  try {
    load_bundle(f.path);
    FAIL("truncated bundle loaded");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(f.path) != std::string::npos);
  }
  CHECK_THROWS_AS(load_bundle("/tmp/modgen-test-nonexistent.bundle"),
                  std::runtime_error);
}

TEST_CASE("loading the wrong checkpoint kind is rejected") {
  TempFile f("wrongkind.bundle");
  RngStream rng(308);
  save_dataset(f.path, rng.normal_mat(3, 2), rng.normal_mat(3, 1));
  CHECK_THROWS_AS(load_mlp(f.path), std::runtime_error);
  CHECK_THROWS_AS(load_modular(f.path), std::runtime_error);
  CHECK_THROWS_AS(load_projections(f.path), std::runtime_error);
}
