#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "modgen/harness.hpp"
#include "modgen/images.hpp"
#include "modgen/linear_sim.hpp"
#include "modgen/module_init.hpp"
#include "modgen/nn.hpp"
#include "modgen/serialize.hpp"
#include "modgen/sine_task.hpp"
#include "modgen/theory.hpp"

namespace {

using modgen::Json;

struct Invocation {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
  std::uint64_t seed = 0;
  int threads = 0;
};

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("invalid JSON in " + path + ": " + e.what());
  }
}

void apply_override(Json& cfg, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must be key=value: " + kv);
  std::string key = kv.substr(0, eq);
  std::string val = kv.substr(eq + 1);
  Json parsed;
  try {
    parsed = Json::parse(val);
  } catch (const Json::parse_error&) {
    parsed = val;  // bare strings allowed unquoted
  }
  Json* node = &cfg;
  size_t start = 0;
  while (true) {
    size_t dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw std::invalid_argument("bad override key: " + key);
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

// schema tree: object values recurse, true accepts any value, "*" key accepts
// any member name at that level
void check_keys(const Json& cfg, const Json& schema, const std::string& path) {
  if (!schema.is_object() || !cfg.is_object()) return;
  bool wildcard = schema.contains("*");
  for (const auto& [key, value] : cfg.items()) {
    std::string here = path.empty() ? key : path + "." + key;
    if (!schema.contains(key)) {
      if (wildcard) continue;
      throw std::invalid_argument("unknown config key: " + here);
    }
    if (schema.at(key).is_object()) check_keys(value, schema.at(key), here);
  }
}

Json resolve_config(const Invocation& inv, const Json& schema,
                    bool require_file = false) {
  Json cfg = Json::object();
  if (!inv.config_path.empty())
    cfg = load_json_file(inv.config_path);
  else if (require_file)
    throw std::invalid_argument("--config is required for this subcommand");
  for (const auto& kv : inv.overrides) apply_override(cfg, kv);
  check_keys(cfg, schema, "");
  return cfg;
}

void print_manifest(const std::string& cmd, const Invocation& inv, const Json& cfg,
                    const Json& extra = Json::object()) {
  Json m;
  m["subcommand"] = cmd;
  m["seed"] = inv.seed;
  m["threads"] = inv.threads;
  if (!inv.output.empty()) m["output"] = inv.output;
  m["config"] = cfg;
  for (const auto& [key, value] : extra.items()) m[key] = value;
  std::cerr << "manifest " << m.dump() << "\n";
}

int thread_count(const Invocation& inv) {
  if (inv.threads > 0) return inv.threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

std::string default_out_dir() {
  const char* env = std::getenv("MODGEN_OUT_DIR");
  return env && *env ? env : "modgen-out";
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open output file: " + path);
  return file;
}

modgen::SpectrumSpec spectrum_from(const Json& cfg) {
  modgen::SpectrumSpec s;
  if (cfg.contains("spectrum")) {
    const Json& sp = cfg.at("spectrum");
    s.c = sp.value("c", 1.0);
    s.omega = sp.value("omega", 1.5);
    s.dim = sp.value("dim", 1);
  }
  return s;
}

std::vector<long> long_list(const Json& v) {
  std::vector<long> out;
  if (v.is_array()) {
    for (const auto& x : v) out.push_back(x.get<long>());
  } else if (v.is_object()) {
    long from = v.at("from"), to = v.at("to"), step = v.value("step", 1L);
    if (step <= 0) throw std::invalid_argument("range step must be positive");
    for (long x = from; x <= to; x += step) out.push_back(x);
  } else {
    out.push_back(v.get<long>());
  }
  return out;
}

const Json spectrum_schema = {
    {"c", true}, {"omega", true}, {"dim", true}};

int cmd_theory_curve(const Invocation& inv) {
  Json schema = {{"spectrum", spectrum_schema},
                 {"d", true},
                 {"n", true},
                 {"p", true},
                 {"modular", Json{{"m", true}, {"b", true}}},
                 {"mc_trials", true}};
  Json cfg = resolve_config(inv, schema);
  modgen::SpectrumSpec spec = spectrum_from(cfg);
  int d = cfg.value("d", 1);
  std::vector<long> ns = long_list(cfg.value("n", Json::array({100})));
  std::vector<long> ps = long_list(cfg.value("p", Json::array({50})));
  int trials = cfg.value("mc_trials", 10000);
  bool modular = cfg.contains("modular");
  long mm = 0, mb = 0;
  if (modular) {
    mm = cfg.at("modular").at("m");
    mb = cfg.at("modular").at("b");
  }
  print_manifest("theory-curve", inv, cfg);
  modgen::RngStream rng(inv.seed, 1);
  std::ofstream file;
  std::ostream& out = open_output(file, inv.output);
  out << "n,p,train,test\n";
  for (long n : ns)
    for (long p : ps) {
      modgen::LossPair lp =
          modular ? modgen::modular_losses(spec, n, p, d, mm, mb, &rng, trials)
                  : modgen::monolithic_losses(spec, n, p, d, &rng, trials);
      out << n << "," << p << "," << modgen::format_double(lp.train) << ","
          << modgen::format_double(lp.test) << "\n";
    }
  return 0;
}

int cmd_simulate_linear(const Invocation& inv) {
  Json schema = {{"spectrum", spectrum_schema},
                 {"n", true},
                 {"p", true},
                 {"d", true},
                 {"modular", Json{{"m", true}, {"b", true}}},
                 {"P", true},
                 {"trials", true},
                 {"n_test", true},
                 {"tail_compensation", true}};
  Json cfg = resolve_config(inv, schema);
  modgen::LinearSimConfig sim;
  sim.spectrum = spectrum_from(cfg);
  sim.d = cfg.value("d", 1);
  sim.P = cfg.value("P", 2000L);
  sim.trials = cfg.value("trials", 200);
  sim.n_test = cfg.value("n_test", 256);
  sim.tail_compensation = cfg.value("tail_compensation", true);
  bool modular = cfg.contains("modular");
  if (modular) {
    sim.m = cfg.at("modular").at("m");
    sim.b = cfg.at("modular").at("b");
  }
  std::vector<long> ns = long_list(cfg.value("n", Json(100)));
  std::vector<long> ps = long_list(cfg.value("p", Json(50)));
  print_manifest("simulate-linear", inv, cfg);
  std::ofstream file;
  std::ostream& out = open_output(file, inv.output);
  out << "n,p,train_mean,train_se,test_mean,test_se,trials\n";
  for (long n : ns)
    for (long p : ps) {
      sim.n = n;
      sim.p = p;
      modgen::RngStream rng(inv.seed, std::uint64_t(n * 1000003 + p));
      modgen::SimResult r = modular
                                ? modgen::simulate_modular(sim, rng, thread_count(inv))
                                : modgen::simulate_monolithic(sim, rng, thread_count(inv));
      out << n << "," << p << "," << modgen::format_double(r.train.mean) << ","
          << modgen::format_double(r.train.se) << ","
          << modgen::format_double(r.test.mean) << ","
          << modgen::format_double(r.test.se) << "," << r.trials << "\n";
    }
  return 0;
}

modgen::Bundle sine_task_bundle(const modgen::SineTask& task) {
  modgen::Bundle b;
  b.header["kind"] = "sine-task";
  b.header["k"] = task.k;
  b.header["m"] = task.m;
  b.header["tau"] = task.tau;
  b.header["nonlinear"] = task.nonlinear;
  b.tensors = {{"amp", task.amp}, {"freq", task.freq}, {"phase", task.phase},
               {"U", task.U}};
  return b;
}

modgen::SineTask sine_task_from_bundle(const modgen::Bundle& b) {
  if (b.header.value("kind", "") != "sine-task")
    throw std::invalid_argument("bundle is not a sine task");
  modgen::SineTask t;
  t.k = b.header.at("k");
  t.m = b.header.at("m");
  t.tau = b.header.at("tau");
  t.nonlinear = b.header.at("nonlinear");
  for (const auto& [name, mat] : b.tensors) {
    if (name == "amp") t.amp = mat;
    else if (name == "freq") t.freq = mat;
    else if (name == "phase") t.phase = mat;
    else if (name == "U") t.U = mat;
  }
  return t;
}

int cmd_gen_task(const Invocation& inv) {
  Json schema = {{"kind", true},     {"k", true},         {"m", true},
                 {"tau", true},      {"nonlinear", true}, {"n", true},
                 {"n_test", true},   {"source", true},    {"paths", true},
                 {"per_class", true}, {"ood_split", true}, {"ood_test_side", true},
                 {"noise_sigma", true}, {"normalize", true}};
  Json cfg = resolve_config(inv, schema, true);
  std::string kind = cfg.value("kind", "sine");
  std::string prefix = inv.output.empty() ? default_out_dir() + "/task" : inv.output;
  std::filesystem::create_directories(
      std::filesystem::path(prefix).parent_path().empty()
          ? "."
          : std::filesystem::path(prefix).parent_path());
  modgen::RngStream rng(inv.seed, 7);
  Json emitted = Json::array();
  if (kind == "sine") {
    int k = cfg.value("k", 1), m = cfg.value("m", 5), tau = cfg.value("tau", 3);
    bool nonlinear = cfg.value("nonlinear", false);
    long n = cfg.value("n", 1000L), n_test = cfg.value("n_test", 0L);
    modgen::SineTask task = modgen::gen_sine_task(rng, k, m, tau, nonlinear);
    modgen::save_bundle(prefix + "-task.bundle", sine_task_bundle(task));
    emitted.push_back(prefix + "-task.bundle");
    modgen::RegressionData data = modgen::sample_sine_dataset(task, rng, n);
    modgen::save_dataset(prefix + "-data.bundle", data.X, data.y,
                         Json{{"task", "sine"}});
    emitted.push_back(prefix + "-data.bundle");
    if (n_test > 0) {
      modgen::RegressionData test = modgen::sample_sine_dataset(task, rng, n_test);
      modgen::save_dataset(prefix + "-test.bundle", test.X, test.y,
                           Json{{"task", "sine"}});
      emitted.push_back(prefix + "-test.bundle");
    }
  } else if (kind == "compositional") {
    std::string source = cfg.value("source", "toy");
    modgen::ImageSet images;
    if (source == "toy") {
      images = modgen::gen_toy_images(rng, cfg.value("per_class", 200L));
    } else if (source == "cifar") {
      if (!cfg.contains("paths"))
        throw std::invalid_argument("compositional cifar source needs paths");
      images = modgen::load_cifar10(
          cfg.at("paths").get<std::vector<std::string>>());
    } else {
      throw std::invalid_argument("unknown image source: " + source);
    }
    modgen::CompositionalOpts opts;
    opts.ood_split = cfg.value("ood_split", 0.0);
    opts.ood_test_side = cfg.value("ood_test_side", false);
    opts.noise_sigma = cfg.value("noise_sigma", 0.0);
    opts.normalize = cfg.value("normalize", true);
    int k = cfg.value("k", 2);
    long n = cfg.value("n", 20000L);
    modgen::CompositionalDataset data =
        modgen::gen_compositional(rng, images, k, n, opts);
    modgen::save_dataset(prefix + "-data.bundle", data.X, data.Y,
                         Json{{"task", "compositional"},
                              {"k", k},
                              {"image_dim", data.image_dim}});
    emitted.push_back(prefix + "-data.bundle");
    long n_test = cfg.value("n_test", 0L);
    if (n_test > 0) {
      modgen::CompositionalDataset test =
          modgen::gen_compositional(rng, images, k, n_test, opts);
      modgen::save_dataset(prefix + "-test.bundle", test.X, test.Y,
                           Json{{"task", "compositional"},
                                {"k", k},
                                {"image_dim", test.image_dim}});
      emitted.push_back(prefix + "-test.bundle");
    }
  } else {
    throw std::invalid_argument("unknown task kind: " + kind);
  }
  print_manifest("gen-task", inv, cfg, Json{{"files", emitted}});
  return 0;
}

modgen::KernelKind kernel_kind_named(const std::string& name) {
  if (name == "sine-linear") return modgen::KernelKind::SineLinear;
  if (name == "rbf-projection") return modgen::KernelKind::RbfProjection;
  if (name == "distance") return modgen::KernelKind::Distance;
  throw std::invalid_argument("unknown kernel kind: " + name);
}

int cmd_init_modules(const Invocation& inv, const std::string& data_path) {
  Json schema = {{"kernel", Json{{"kind", true}, {"sigma", true}, {"iters", true},
                                 {"batch_size", true}, {"lr", true},
                                 {"jitter", true}, {"K", true}, {"proj_dim", true},
                                 {"class_slice", true}}}};
  Json cfg = resolve_config(inv, schema);
  Json ker = cfg.value("kernel", Json::object());
  if (data_path.empty()) throw std::invalid_argument("--data is required");
  Eigen::MatrixXd X, Y;
  modgen::load_dataset(data_path, X, Y);
  modgen::KernelSpec tmpl;
  tmpl.kind = kernel_kind_named(ker.value("kind", "sine-linear"));
  tmpl.sigma = ker.value("sigma", 1.0);
  modgen::InitConfig ic;
  ic.iters = ker.value("iters", 1000L);
  ic.batch_size = ker.value("batch_size", 128);
  ic.lr = ker.value("lr", 0.01);
  ic.jitter = ker.value("jitter", 1e-6);
  ic.K_modules = ker.value("K", 1);
  ic.proj_dim = ker.value("proj_dim", 1);
  ic.class_slice = ker.value("class_slice", false);
  modgen::RngStream rng(inv.seed, 11);
  std::vector<modgen::InitResult> results =
      modgen::init_all_modules(X, Y, tmpl, ic, rng);
  std::vector<modgen::KernelSpec> specs;
  Json finals = Json::array(), resets = Json::array();
  for (const auto& r : results) {
    specs.push_back(r.spec);
    finals.push_back(r.loss_trace.empty() ? 0.0 : r.loss_trace.back());
    resets.push_back(r.degenerate_resets);
  }
  std::string out = inv.output.empty() ? default_out_dir() + "/projections.bundle"
                                       : inv.output;
  std::filesystem::path parent = std::filesystem::path(out).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  modgen::save_projections(out, specs);
  print_manifest("init-modules", inv, cfg,
                 Json{{"final_losses", finals}, {"degenerate_resets", resets},
                      {"output", out}});
  return 0;
}

modgen::TrainConfig train_config_from(const Json& tr) {
  modgen::TrainConfig tc;
  std::string loss = tr.value("loss", "mse");
  if (loss == "mse") tc.loss = modgen::LossKind::Mse;
  else if (loss == "softmax") tc.loss = modgen::LossKind::SoftmaxPerBlock;
  else throw std::invalid_argument("unknown loss: " + loss);
  tc.lr = tr.value("lr", 1e-3);
  tc.iterations = tr.value("iterations", 1000L);
  tc.batch_size = tr.value("batch_size", 128);
  tc.epochs_mode = tr.value("epochs_mode", false);
  tc.epochs = tr.value("epochs", 1);
  tc.record_every = tr.value("record_every", 100);
  tc.train_projections = tr.value("train_projections", true);
  return tc;
}

int cmd_train(const Invocation& inv, const std::string& data_path,
              const std::string& init_method, const std::string& proj_path,
              const std::string& task_path) {
  Json schema = {
      {"architecture",
       Json{{"type", true}, {"mode", true}, {"hidden", true}, {"K", true},
            {"proj_dim", true}, {"batchnorm", true}, {"shared_bodies", true},
            {"nonlinear", true}}},
      {"train", Json{{"loss", true}, {"lr", true}, {"iterations", true},
                     {"batch_size", true}, {"epochs_mode", true}, {"epochs", true},
                     {"record_every", true}, {"train_projections", true}}}};
  Json cfg = resolve_config(inv, schema, true);
  if (data_path.empty()) throw std::invalid_argument("--data is required");
  Eigen::MatrixXd X, Y;
  Json data_header;
  modgen::load_dataset(data_path, X, Y, &data_header);
  const Json& arch = cfg.value("architecture", Json::object());
  modgen::TrainConfig tc = train_config_from(cfg.value("train", Json::object()));
  modgen::RngStream rng(inv.seed, 13);
  modgen::RngStream train_rng = rng.substream(1);
  std::string out = inv.output.empty() ? default_out_dir() + "/model.bundle"
                                       : inv.output;
  std::filesystem::path parent = std::filesystem::path(out).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);

  std::string type = arch.value("type", "modular");
  std::vector<int> hidden = arch.value("hidden", std::vector<int>{32, 32});
  Json extra;
  double final_loss = 0.0;
  bool diverged = false;
  if (type == "monolithic") {
    if (init_method != "random")
      throw std::invalid_argument("monolithic training only supports --init random");
    std::vector<int> sizes;
    sizes.push_back(int(X.cols()));
    for (int h : hidden) sizes.push_back(h);
    sizes.push_back(int(Y.cols()));
    modgen::Mlp model = modgen::init_mlp(rng, sizes, arch.value("batchnorm", false));
    modgen::TrainResult res = modgen::train_mlp(model, X, Y, tc, train_rng);
    final_loss = res.final_loss;
    diverged = res.diverged;
    modgen::save_mlp(out, model, Json{{"trained_on", data_path}});
    extra["loss_trace"] = res.loss_trace;
  } else if (type == "modular") {
    std::string mode = arch.value("mode", "regression");
    int K = arch.value("K", 1);
    modgen::ModularNet net;
    if (mode == "regression") {
      net = modgen::init_modular_regression(rng, K, int(X.cols()), hidden,
                                            arch.value("nonlinear", false));
    } else if (mode == "classification") {
      if (Y.cols() % 10 != 0)
        throw std::invalid_argument("classification targets must be k-hot over 10k columns");
      net = modgen::init_modular_classification(
          rng, K, int(X.cols()), arch.value("proj_dim", 1), hidden, int(Y.cols()),
          arch.value("batchnorm", false), arch.value("shared_bodies", false));
    } else {
      throw std::invalid_argument("unknown architecture mode: " + mode);
    }
    if (init_method == "kernel") {
      if (proj_path.empty())
        throw std::invalid_argument("--init kernel requires --proj from init-modules");
      std::vector<modgen::KernelSpec> specs = modgen::load_projections(proj_path);
      if (int(specs.size()) < K)
        throw std::invalid_argument("projection bundle has fewer modules than K");
      for (int j = 0; j < K; ++j) {
        const modgen::KernelSpec& s = specs[j];
        net.proj[j] = s.kind == modgen::KernelKind::RbfProjection
                          ? s.U
                          : Eigen::MatrixXd(s.u);
      }
    } else if (init_method == "ground-truth") {
      if (task_path.empty())
        throw std::invalid_argument("--init ground-truth requires --task");
      modgen::SineTask task = sine_task_from_bundle(modgen::load_bundle(task_path));
      for (int j = 0; j < K; ++j)
        net.proj[j] = task.U.row(j % task.k).transpose();
    } else if (init_method != "random") {
      throw std::invalid_argument("unknown init method: " + init_method);
    }
    modgen::TrainResult res = modgen::train_modular(net, X, Y, tc, train_rng);
    final_loss = res.final_loss;
    diverged = res.diverged;
    modgen::save_modular(out, net, Json{{"trained_on", data_path}});
    extra["loss_trace"] = res.loss_trace;
  } else {
    throw std::invalid_argument("unknown architecture type: " + type);
  }
  extra["final_loss"] = final_loss;
  extra["diverged"] = diverged;
  extra["init"] = init_method;
  extra["output"] = out;
  print_manifest("train", inv, cfg, extra);
  std::cout << modgen::format_double(final_loss) << "\n";
  return diverged ? 2 : 0;
}

int cmd_eval(const Invocation& inv, const std::string& model_path,
             const std::string& data_path, const std::string& metric_name) {
  if (model_path.empty() || data_path.empty())
    throw std::invalid_argument("--model and --data are required");
  modgen::Metric metric;
  if (metric_name == "mse") metric = modgen::Metric::Mse;
  else if (metric_name == "accuracy") metric = modgen::Metric::PerComponentAccuracy;
  else throw std::invalid_argument("unknown metric: " + metric_name);
  Eigen::MatrixXd X, Y;
  modgen::load_dataset(data_path, X, Y);
  std::string kind = modgen::bundle_kind(model_path);
  double value = 0.0;
  if (kind == "mlp") {
    modgen::Mlp model = modgen::load_mlp(model_path);
    value = modgen::evaluate(model, X, Y, metric);
  } else if (kind == "modular") {
    modgen::ModularNet model = modgen::load_modular(model_path);
    value = modgen::evaluate(model, X, Y, metric);
  } else {
    throw std::invalid_argument("not a model bundle: " + model_path);
  }
  print_manifest("eval", inv, Json{{"model", model_path}, {"data", data_path},
                                   {"metric", metric_name}});
  std::cout << modgen::format_double(value) << "\n";
  return 0;
}

int cmd_sample_complexity(const Invocation& inv, const std::string& results_path,
                          const std::string& format) {
  Json schema = {{"task", Json{{"*", true}}},
                 {"architecture", Json{{"*", true}}},
                 {"init", Json{{"*", true}}},
                 {"train", Json{{"*", true}}},
                 {"search", Json{{"*", true}}},
                 {"seeds", true}};
  Json cfg = resolve_config(inv, schema, true);
  std::string out_dir = inv.output.empty() ? default_out_dir() : inv.output;
  std::vector<modgen::ExperimentRecord> records =
      modgen::run_experiment(cfg, out_dir);
  if (!results_path.empty()) modgen::emit_results(records, results_path, format);
  print_manifest("sample-complexity", inv, cfg,
                 Json{{"records", records.size()},
                      {"records_dir", out_dir + "/" + modgen::config_hash(cfg)}});
  for (const auto& r : records) std::cout << r.fields.dump() << "\n";
  return 0;
}

std::vector<Eigen::VectorXd> load_directions(const std::string& path) {
  std::string kind = modgen::bundle_kind(path);
  std::vector<Eigen::VectorXd> dirs;
  if (kind == "projections") {
    for (const auto& s : modgen::load_projections(path)) {
      if (s.kind == modgen::KernelKind::RbfProjection)
        for (long c = 0; c < s.U.cols(); ++c) dirs.push_back(s.U.col(c));
      else
        dirs.push_back(s.u);
    }
  } else if (kind == "modular") {
    modgen::ModularNet net = modgen::load_modular(path);
    for (const auto& p : net.proj)
      for (long c = 0; c < p.cols(); ++c) dirs.push_back(p.col(c));
  } else if (kind == "sine-task") {
    modgen::SineTask t = sine_task_from_bundle(modgen::load_bundle(path));
    for (int i = 0; i < t.U.rows(); ++i) dirs.push_back(t.U.row(i).transpose());
  } else {
    throw std::invalid_argument("no projection directions in bundle: " + path);
  }
  return dirs;
}

int cmd_similarity(const Invocation& inv, const std::string& learned_path,
                   const std::string& targets_path) {
  if (learned_path.empty() || targets_path.empty())
    throw std::invalid_argument("--learned and --targets are required");
  std::vector<Eigen::VectorXd> learned = load_directions(learned_path);
  std::vector<Eigen::VectorXd> targets = load_directions(targets_path);
  if (learned.empty() || targets.empty())
    throw std::invalid_argument("empty projection list");
  Eigen::MatrixXd T(long(targets.size()), targets[0].size());
  for (size_t i = 0; i < targets.size(); ++i) T.row(long(i)) = targets[i].transpose();
  double score = modgen::similarity_score(learned, T);
  print_manifest("similarity", inv,
                 Json{{"learned", learned_path}, {"targets", targets_path}});
  std::cout << modgen::format_double(score) << "\n";
  return 0;
}

int cmd_fit_theory(const Invocation& inv, const std::string& data_path) {
  Json schema = {{"observations", true}, {"grid_points", true},
                 {"refine_sweeps", true}};
  Json cfg = resolve_config(inv, schema);
  Json obs_json;
  if (cfg.contains("observations")) {
    obs_json = cfg.at("observations");
  } else if (!data_path.empty()) {
    obs_json = load_json_file(data_path);
  } else {
    throw std::invalid_argument("need observations in config or --data file");
  }
  std::vector<modgen::FitObservation> obs;
  for (const auto& o : obs_json) {
    modgen::FitObservation f;
    f.m = o.value("m", 1);
    f.p_prime = o.at("p_prime");
    f.n = o.at("n");
    f.d = o.value("d", 1);
    f.train = o.value("train", 0.0);
    f.test = o.at("test");
    obs.push_back(f);
  }
  modgen::FitResult fit = modgen::fit_theory_params(
      obs, cfg.value("grid_points", 20), cfg.value("refine_sweeps", 40));
  print_manifest("fit-theory", inv, cfg);
  Json out = {{"c", fit.c}, {"omega", fit.omega}, {"alpha", fit.alpha},
              {"objective", fit.objective}};
  std::cout << out.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modular generalization toolkit"};
  app.require_subcommand(1);

  Invocation inv;
  std::string data_path, model_path, proj_path, task_path, learned_path,
      targets_path, results_path;
  std::string init_method = "random", metric_name = "mse", format = "csv";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", inv.config_path, "JSON config file");
    sub->add_option("--set", inv.overrides,
                    "dotted-key override, e.g. --set train.lr=0.01");
    sub->add_option("-o,--output", inv.output, "output path");
    sub->add_option("--seed", inv.seed, "RNG seed");
    sub->add_option("--threads", inv.threads, "worker thread cap");
  };

  CLI::App* c_theory = app.add_subcommand("theory-curve",
                                          "closed-form loss curves to CSV");
  add_common(c_theory);
  CLI::App* c_sim = app.add_subcommand("simulate-linear",
                                       "min-norm linear simulation to CSV");
  add_common(c_sim);
  CLI::App* c_gen = app.add_subcommand("gen-task", "generate task datasets");
  add_common(c_gen);
  CLI::App* c_init = app.add_subcommand("init-modules",
                                        "kernel search for module projections");
  add_common(c_init);
  c_init->add_option("--data", data_path, "dataset bundle");
  CLI::App* c_train = app.add_subcommand("train", "train a model on a dataset");
  add_common(c_train);
  c_train->add_option("--data", data_path, "dataset bundle");
  c_train->add_option("--init", init_method, "random|kernel|ground-truth");
  c_train->add_option("--proj", proj_path, "projections bundle for --init kernel");
  c_train->add_option("--task", task_path, "task bundle for --init ground-truth");
  CLI::App* c_eval = app.add_subcommand("eval", "evaluate a model bundle");
  add_common(c_eval);
  c_eval->add_option("--model", model_path, "model bundle");
  c_eval->add_option("--data", data_path, "dataset bundle");
  c_eval->add_option("--metric", metric_name, "mse|accuracy");
  CLI::App* c_search = app.add_subcommand("sample-complexity",
                                          "grid runner with sample-size search");
  add_common(c_search);
  c_search->add_option("--results", results_path, "emit records to this file");
  c_search->add_option("--format", format, "csv|json for --results");
  CLI::App* c_simil = app.add_subcommand("similarity",
                                         "projection similarity score");
  add_common(c_simil);
  c_simil->add_option("--learned", learned_path, "projections or model bundle");
  c_simil->add_option("--targets", targets_path, "task or projections bundle");
  CLI::App* c_fit = app.add_subcommand("fit-theory",
                                       "fit spectrum constants to observations");
  add_common(c_fit);
  c_fit->add_option("--data", data_path, "JSON observations file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (c_theory->parsed()) return cmd_theory_curve(inv);
    if (c_sim->parsed()) return cmd_simulate_linear(inv);
    if (c_gen->parsed()) return cmd_gen_task(inv);
    if (c_init->parsed()) return cmd_init_modules(inv, data_path);
    if (c_train->parsed())
      return cmd_train(inv, data_path, init_method, proj_path, task_path);
    if (c_eval->parsed()) return cmd_eval(inv, model_path, data_path, metric_name);
    if (c_search->parsed()) return cmd_sample_complexity(inv, results_path, format);
    if (c_simil->parsed()) return cmd_similarity(inv, learned_path, targets_path);
    if (c_fit->parsed()) return cmd_fit_theory(inv, data_path);
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
