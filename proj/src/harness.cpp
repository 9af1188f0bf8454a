#include "modgen/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "modgen/module_init.hpp"
#include "modgen/nn.hpp"
#include "modgen/numerics.hpp"
#include "modgen/sine_task.hpp"

namespace modgen {

SampleSearchResult binary_search_sample_complexity(
    const std::function<double(long)>& loss_at_n, double eps,
    SampleSearchState state) {
  SampleSearchResult res;
  std::map<long, double> cache;
  const double inf = std::numeric_limits<double>::infinity();
  while (true) {
    if (state.r - state.l < state.stop_gap) break;
    if (res.evals >= state.B) break;
    long n = long(std::llround(std::pow(2.0, state.c)));
    if (n < 1) n = 1;
    auto it = cache.find(n);
    double e;
    if (it != cache.end()) {
      e = it->second;
    } else {
      e = loss_at_n(n);
      cache[n] = e;
    }
    res.evals += 1;
    if (e > eps) {
      state.l = state.c;
      state.c = state.r == inf ? state.c + 2.0 : 0.5 * (state.c + state.r);
    } else {
      state.r = state.c;
      state.c = 0.5 * (state.l + state.c);
    }
    if (state.c >= state.c_max) {
      res.exceeded = true;
      break;
    }
  }
  res.c = state.c;
  res.l = state.l;
  res.r = state.r;
  res.n = long(std::llround(std::pow(2.0, state.c)));
  return res;
}

double similarity_score(const std::vector<Eigen::VectorXd>& learned,
                        const Eigen::MatrixXd& targets) {
  if (learned.empty() || targets.rows() == 0)
    throw std::invalid_argument("similarity_score: empty input");
  KahanSum acc;
  for (const auto& u : learned) {
    double nu = u.norm();
    if (nu < 1e-300) throw std::invalid_argument("similarity_score: zero vector");
    double best = 0.0;
    for (long t = 0; t < targets.rows(); ++t) {
      double nt = targets.row(t).norm();
      if (nt < 1e-300) throw std::invalid_argument("similarity_score: zero target");
      best = std::max(best, std::abs(targets.row(t).dot(u)) / (nu * nt));
    }
    acc.add(best);
  }
  return acc.value() / double(learned.size());
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string config_hash(const Json& config) {
  std::string text = config.dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return buf;
}

namespace {

std::vector<long> as_list(const Json& v) {
  std::vector<long> out;
  if (v.is_array())
    for (const auto& x : v) out.push_back(x.get<long>());
  else
    out.push_back(v.get<long>());
  return out;
}

std::vector<std::string> init_methods(const Json& config) {
  if (!config.contains("init") || !config.at("init").contains("methods"))
    return {"random"};
  return config.at("init").at("methods").get<std::vector<std::string>>();
}

KernelKind kernel_kind_for(const Json& task) {
  return task.value("nonlinear", false) ? KernelKind::Distance
                                        : KernelKind::SineLinear;
}

// one grid point of the sine-task workflow
Json run_sine_point(const Json& config, long seed, long m,
                    const std::string& init_method, long n_override) {
  const Json& task_cfg = config.at("task");
  const Json& arch = config.at("architecture");
  Json train_cfg = config.value("train", Json::object());

  int k = int(task_cfg.value("k", 1));
  int tau = int(task_cfg.value("tau", 3));
  bool nonlinear = task_cfg.value("nonlinear", false);
  long n = n_override > 0 ? n_override : task_cfg.value("n", 1000L);
  long n_test = task_cfg.value("n_test", 4096L);

  RngStream root{std::uint64_t(seed), std::uint64_t(m)};
  RngStream task_rng = root.substream(0);
  RngStream data_rng = root.substream(1);
  RngStream init_rng = root.substream(2);
  RngStream train_rng = root.substream(3);

  SineTask task = gen_sine_task(task_rng, k, int(m), tau, nonlinear);
  RegressionData train_data = sample_sine_dataset(task, data_rng, n);
  RegressionData test_data = sample_sine_dataset(task, data_rng, n_test);

  TrainConfig tc;
  tc.loss = LossKind::Mse;
  tc.lr = train_cfg.value("lr", 1e-3);
  tc.iterations = train_cfg.value("iterations", 1000L);
  tc.batch_size = int(train_cfg.value("batch_size", 128));

  Json rec;
  rec["seed"] = seed;
  rec["m"] = m;
  rec["n"] = n;
  rec["init"] = init_method;
  rec["task"] = task_cfg.value("kind", "sine");
  rec["arch"] = arch.value("type", "modular");

  std::vector<int> hidden = arch.value("hidden", std::vector<int>{32, 32});
  if (arch.value("type", "modular") == std::string("monolithic")) {
    std::vector<int> sizes;
    sizes.push_back(int(m));
    for (int h : hidden) sizes.push_back(h);
    sizes.push_back(1);
    Mlp model = init_mlp(init_rng, sizes, false);
    TrainResult tr = train_mlp(model, train_data.X, train_data.y, tc, train_rng);
    rec["train_loss"] = tr.final_loss;
    rec["diverged"] = tr.diverged;
    rec["test_loss"] = evaluate(model, test_data.X, test_data.y, Metric::Mse);
    return rec;
  }

  int K = int(arch.value("K", 5 * k));
  ModularNet net = init_modular_regression(init_rng, K, int(m), hidden, nonlinear);
  if (init_method == "kernel") {
    const Json& ker = config.value("init", Json::object());
    InitConfig ic;
    ic.iters = ker.value("iters", 1000L);
    ic.batch_size = int(ker.value("batch_size", 128));
    ic.lr = ker.value("lr", 0.01);
    ic.jitter = ker.value("jitter", 1e-6);
    ic.K_modules = K;
    KernelSpec tmpl;
    tmpl.kind = kernel_kind_for(task_cfg);
    tmpl.sigma = ker.value("sigma", 1.0);
    auto inits = init_all_modules(train_data.X, train_data.y, tmpl, ic, init_rng);
    for (int j = 0; j < K; ++j) net.proj[j] = inits[j].spec.u;
  } else if (init_method == "ground-truth") {
    for (int j = 0; j < K; ++j) net.proj[j] = task.U.row(j % k).transpose();
  }

  std::vector<Eigen::VectorXd> dirs;
  for (const auto& p : net.proj) dirs.push_back(p.col(0));
  rec["similarity"] = similarity_score(dirs, task.U);

  TrainResult tr = train_modular(net, train_data.X, train_data.y, tc, train_rng);
  rec["train_loss"] = tr.final_loss;
  rec["diverged"] = tr.diverged;
  rec["test_loss"] = evaluate(net, test_data.X, test_data.y, Metric::Mse);
  return rec;
}

}  // namespace

std::vector<ExperimentRecord> run_experiment(const Json& config,
                                             const std::string& out_dir) {
  if (!config.contains("task"))
    throw std::invalid_argument("run_experiment: config missing task section");
  if (!config.contains("architecture"))
    throw std::invalid_argument("run_experiment: config missing architecture section");
  std::string kind = config.at("task").value("kind", "sine");
  if (kind != "sine")
    throw std::invalid_argument("run_experiment: unsupported task kind " + kind);

  std::vector<long> seeds;
  if (config.contains("seeds")) seeds = as_list(config.at("seeds"));
  std::vector<long> dims = as_list(config.at("task").value("m", Json(5)));
  std::vector<std::string> inits = init_methods(config);

  std::string hash = config_hash(config);
  std::filesystem::path dir = std::filesystem::path(out_dir) / hash;
  std::filesystem::create_directories(dir);
  std::filesystem::path records_path = dir / "records.jsonl";

  std::vector<ExperimentRecord> records;
  std::map<std::string, bool> done;
  if (std::filesystem::exists(records_path)) {
    std::ifstream in(records_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ExperimentRecord r{Json::parse(line)};
      done[r.fields.value("point_key", "")] = true;
      records.push_back(std::move(r));
    }
  }

  std::ofstream out(records_path, std::ios::app);
  bool do_search = config.contains("search");
  for (long seed : seeds) {
    for (long m : dims) {
      for (const auto& init : inits) {
        std::string key = std::to_string(seed) + ":" + std::to_string(m) + ":" + init;
        if (done.count(key)) continue;
        auto t0 = std::chrono::steady_clock::now();
        Json rec;
        try {
          if (do_search) {
            const Json& sc = config.at("search");
            double eps = sc.at("eps");
            SampleSearchState st;
            st.c = sc.value("c0", 12.0);
            st.B = int(sc.value("B", 18));
            st.stop_gap = sc.value("stop_gap", 0.3);
            st.c_max = sc.value("c_max", 22.0);
            auto probe = [&](long n) {
              Json p = run_sine_point(config, seed, m, init, n);
              return p.value("test_loss", std::numeric_limits<double>::infinity());
            };
            SampleSearchResult sr = binary_search_sample_complexity(probe, eps, st);
            rec["seed"] = seed;
            rec["m"] = m;
            rec["init"] = init;
            rec["sample_n"] = sr.exceeded ? Json("exceeded") : Json(sr.n);
            rec["c"] = sr.c;
            rec["l"] = sr.l;
            rec["r"] = sr.r;
          } else {
            rec = run_sine_point(config, seed, m, init, 0);
          }
        } catch (const std::exception& e) {
          rec["seed"] = seed;
          rec["m"] = m;
          rec["init"] = init;
          rec["error"] = e.what();
        }
        auto t1 = std::chrono::steady_clock::now();
        rec["point_key"] = key;
        rec["config_hash"] = hash;
        rec["wall_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        out << rec.dump() << "\n";
        out.flush();
        records.push_back(ExperimentRecord{std::move(rec)});
      }
    }
  }
  return records;
}

void emit_results(const std::vector<ExperimentRecord>& records,
                  const std::string& path, const std::string& format) {
  if (format == "json") {
    Json arr = Json::array();
    for (const auto& r : records) arr.push_back(r.fields);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_results: cannot open " + path);
    out << arr.dump(2) << "\n";
    if (!out) throw std::runtime_error("emit_results: write failed for " + path);
    return;
  }
  if (format != "csv")
    throw std::invalid_argument("emit_results: format must be csv or json");
  std::vector<std::string> cols;
  std::map<std::string, bool> seen;
  for (const auto& r : records)
    for (const auto& [key, _] : r.fields.items())
      if (!seen.count(key)) {
        seen[key] = true;
        cols.push_back(key);
      }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_results: cannot open " + path);
  for (size_t i = 0; i < cols.size(); ++i)
    out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& r : records) {
    for (size_t i = 0; i < cols.size(); ++i) {
      if (i) out << ",";
      if (!r.fields.contains(cols[i])) continue;
      const Json& v = r.fields.at(cols[i]);
      if (v.is_number_float())
        out << format_double(v.get<double>());
      else if (v.is_string())
        out << v.get<std::string>();
      else
        out << v.dump();
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("emit_results: write failed for " + path);
}

std::vector<ExperimentRecord> parse_results_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_results_json: cannot open " + path);
  Json arr = Json::parse(in);
  std::vector<ExperimentRecord> out;
  for (auto& v : arr) out.push_back(ExperimentRecord{std::move(v)});
  return out;
}

}  // namespace modgen
