#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "modgen/rng.hpp"

namespace modgen {

using Json = nlohmann::json;

// base-2 exponent bracket for the sample-size search
struct SampleSearchState {
  double l = 0.0;
  double r = std::numeric_limits<double>::infinity();
  double c = 12.0;
  int B = 18;
  double stop_gap = 0.3;
  double c_max = 22.0;
};

struct SampleSearchResult {
  long n = 0;          // round(2^c) at stop
  double c = 0.0;
  double l = 0.0;
  double r = 0.0;
  bool exceeded = false;
  int evals = 0;
};

// doubling-then-bisection on the exponent: failure (loss > eps) raises l and
// steps up, success lowers r and bisects; stops on a narrow bracket, the
// evaluation cap, or the exponent cap
SampleSearchResult binary_search_sample_complexity(
    const std::function<double(long)>& loss_at_n, double eps,
    SampleSearchState state = {});

// mean over learned vectors of the best |cos| against any target row
double similarity_score(const std::vector<Eigen::VectorXd>& learned,
                        const Eigen::MatrixXd& targets);

struct ExperimentRecord {
  Json fields;
};

// grid runner: expands config lists (seeds x dims x init methods), executes
// each point, appends records to <out_dir>/<config-hash>/records.jsonl, and
// skips points already present there on rerun
std::vector<ExperimentRecord> run_experiment(const Json& config,
                                             const std::string& out_dir);

std::string config_hash(const Json& config);

void emit_results(const std::vector<ExperimentRecord>& records,
                  const std::string& path, const std::string& format);
std::vector<ExperimentRecord> parse_results_json(const std::string& path);

// 17 significant digits, enough to round-trip doubles
std::string format_double(double v);

}  // namespace modgen
