#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bhlr::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kDataError = 2, kNumericError = 3 };

/// Reads a JSON config file (empty path: {}) and applies "dotted.key=value"
/// overrides. Values parse as JSON when possible, else as plain strings.
nlohmann::json load_config(const std::string& path, const std::vector<std::string>& overrides);

/// Runs `body`, mapping library exceptions to exit codes and printing the
/// message to `err`.
int guarded(std::ostream& err, const std::function<int()>& body);

struct GenerateArgs {
  std::size_t n = 100;
  std::size_t order = 2;
  std::size_t p = 4;
  std::size_t K = 4;
  std::size_t H = 0;
  std::string kind = "linear";
  std::string link = "sigmoid";
  std::string noise = "bernoulli";
  std::string vector_law = "uniform";
  std::string policy = "increasing";
  double theta_scale = 1.0;
  std::uint64_t seed = 0;
  std::string out_vectors;
  std::string out_edges;
  std::string out_model;
};

struct LiftArgs {
  std::string vectors;
  std::string edges;
  std::string mode = "fully_connected";
  std::string out_edges;
};

struct PredictArgs {
  std::string model;
  std::string vectors;
  std::string tuples;
  std::string out;
};

struct EvalArgs {
  std::string model;
  std::string vectors;
  std::string edges;
  std::string metric = "roc_auc";
  std::string policy = "increasing";
  std::size_t per_anchor = 0;  // 0: 10 for U = 2, 15 otherwise
  std::uint64_t seed = 0;
  std::string out;
};

struct GradcheckArgs {
  std::uint64_t seed = 0;
  std::size_t trials = 3;
};

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);
int cmd_lift(const LiftArgs& args, std::ostream& out, std::ostream& err);
int cmd_train(const nlohmann::json& config, std::ostream& out, std::ostream& err);
int cmd_predict(const PredictArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out, std::ostream& err);

}  // namespace bhlr::cli
