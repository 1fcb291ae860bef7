#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "bhlr/divergence.hpp"
#include "bhlr/errors.hpp"
#include "bhlr/hypernet.hpp"
#include "bhlr/loss.hpp"
#include "bhlr/metrics.hpp"
#include "bhlr/optim.hpp"
#include "bhlr/sampler.hpp"
#include "bhlr/simfn.hpp"
#include "bhlr/synth.hpp"

namespace bhlr::cli {

using nlohmann::json;

namespace {

const json& section(const json& cfg, const char* name) {
  static const json empty = json::object();
  auto it = cfg.find(name);
  return it == cfg.end() ? empty : *it;
}

std::string required(const json& sec, const char* section_name, const char* key) {
  auto it = sec.find(key);
  if (it == sec.end() || !it->is_string() || it->get<std::string>().empty())
    throw ConfigError(std::string("missing config key ") + section_name + "." + key);
  return it->get<std::string>();
}

std::size_t default_per_anchor(std::size_t order) { return order == 2 ? 10 : 15; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::ios_base::failure("cannot write '" + path + "'");
  f << text;
}

// Tuples file: U whitespace-separated node ids per line; blank and '#' lines
// are skipped.
std::vector<HyperIndex> load_tuples(const std::string& path, std::size_t order, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  std::vector<HyperIndex> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::vector<NodeId> ids;
    long long v = 0;
    while (ss >> v) {
      if (v < 0 || static_cast<unsigned long long>(v) >= n)
        throw OutOfRange(path + ":" + std::to_string(lineno) + ": node id " + std::to_string(v) + " outside [0, " +
                         std::to_string(n) + ")");
      ids.push_back(static_cast<NodeId>(v));
    }
    if (!ss.eof()) throw ParseError(path, lineno, "expected integer node ids");
    if (ids.size() != order)
      throw DimMismatch(path + ":" + std::to_string(lineno) + ": tuple has " + std::to_string(ids.size()) +
                        " ids, model order is " + std::to_string(order));
    out.emplace_back(std::move(ids));
  }
  return out;
}

struct Validator {
  bool auc = true;
  std::vector<HyperIndex> indices;
  std::vector<int> labels;
  std::vector<double> observed;
  std::optional<Hypernetwork> net;

  double operator()(const SimilarityModel& model) const {
    const auto scores = score_tuples(model, *net, indices);
    return auc ? roc_auc(scores, labels) : mse(scores, observed);
  }
  bool better(double a, double b) const { return auc ? a > b : a < b; }
};

Validator make_validator(const std::string& metric, Hypernetwork net, std::size_t per_anchor, std::uint64_t seed,
                         std::ostream& err) {
  Validator v;
  if (metric == "roc_auc") {
    auto set = negative_candidate_protocol(net, per_anchor, seed);
    if (set.insufficient)
      err << "warning: some anchors have fewer than " << per_anchor << " zero-weight tuples; using all available\n";
    v.indices = std::move(set.indices);
    v.labels = std::move(set.labels);
  } else if (metric == "mse") {
    v.auc = false;
    v.indices = net.policy() == IndexPolicy::Explicit ? net.explicit_indices() : net.sorted_edges();
    for (const auto& idx : v.indices) v.observed.push_back(net.weight(idx));
    if (v.indices.empty()) throw ConfigError("mse evaluation needs at least one listed tuple");
  } else {
    throw ConfigError("unknown metric '" + metric + "' (roc_auc|mse)");
  }
  v.net.emplace(std::move(net));
  return v;
}

}  // namespace

json load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json cfg = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
      in >> cfg;
    } catch (const json::exception& e) {
      throw ConfigError("config '" + path + "': " + e.what());
    }
  }
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    std::string pointer;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      pointer += "/" + key.substr(start, dot - start);
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    cfg[json::json_pointer(pointer)] = value;
  }
  return cfg;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const UnsupportedKind& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const NonFiniteGradient& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::ios_base::failure& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
}

int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.out_vectors.empty() || a.out_edges.empty()) throw ConfigError("generate needs --out-vectors and --out-edges");
    EmbeddingMap e{parse_embedding_kind(a.kind), a.p, a.K, a.H};
    Rng rng(a.seed, 7);
    SimilarityModel truth = SimilarityModel::initialized(e, parse_link(a.link), a.order, rng);
    std::vector<double> theta(truth.theta().begin(), truth.theta().end());
    for (double& t : theta) t *= a.theta_scale;
    truth.set_theta(std::move(theta));
    PlantedModel planted{truth, parse_noise(a.noise), parse_vector_law(a.vector_law)};
    const Hypernetwork net = generate(planted, a.n, parse_index_policy(a.policy), a.seed);
    save_vectors(a.out_vectors, net.dim(), net.vectors());
    save_hyperedges(a.out_edges, net);
    if (!a.out_model.empty()) save_model(a.out_model, truth);
    out << "generated n=" << net.n() << " U=" << net.order() << " nonzero=" << net.weights().size() << '\n';
    return kOk;
  });
}

int cmd_lift(const LiftArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.out_edges.empty()) throw ConfigError("lift needs --out-edges");
    const Hypernetwork net2 = load_hypernetwork(a.vectors, a.edges, 2, IndexPolicy::IncreasingOnly);
    const Hypernetwork net3 = lift_links_to_hyperlinks(net2, parse_lift_mode(a.mode));
    save_hyperedges(a.out_edges, net3);
    out << "lifted " << net2.weights().size() << " links to " << net3.weights().size() << " hyperlinks\n";
    return kOk;
  });
}

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SimilarityModel model = load_model(a.model);
    const VectorTable table = load_vectors(a.vectors);
    if (table.n > 0 && table.p != model.embedding().p)
      throw DimMismatch("vectors have dimension " + std::to_string(table.p) + ", model expects " +
                        std::to_string(model.embedding().p));
    const std::size_t p = table.n > 0 ? table.p : model.embedding().p;
    const Hypernetwork net(table.n, p, model.order(), table.values, IndexPolicy::AllTuples);
    const auto tuples = load_tuples(a.tuples, model.order(), table.n);
    const auto scores = score_tuples(model, net, tuples);
    std::ostringstream text;
    for (double s : scores) text << format_double(s) << '\n';
    if (a.out.empty())
      out << text.str();
    else
      write_text(a.out, text.str());
    return kOk;
  });
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SimilarityModel model = load_model(a.model);
    const IndexPolicy policy = a.metric == "mse" ? IndexPolicy::Explicit : parse_index_policy(a.policy);
    Hypernetwork net = load_hypernetwork(a.vectors, a.edges, model.order(), policy);
    const std::size_t per_anchor = a.per_anchor ? a.per_anchor : default_per_anchor(model.order());
    const Validator v = make_validator(a.metric, std::move(net), per_anchor, a.seed, err);
    json result;
    result[a.metric] = v(model);
    result["tuples"] = v.indices.size();
    if (v.auc) {
      std::size_t pos = 0;
      for (int l : v.labels) pos += static_cast<std::size_t>(l);
      result["positives"] = pos;
      result["negatives"] = v.labels.size() - pos;
    }
    if (a.out.empty())
      out << result.dump() << '\n';
    else
      write_text(a.out, result.dump() + "\n");
    return kOk;
  });
}

int cmd_train(const json& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const json& data = section(cfg, "data");
    const json& mcfg = section(cfg, "model");
    const json& lcfg = section(cfg, "loss");
    const json& scfg = section(cfg, "sampler");
    const json& ocfg = section(cfg, "optimizer");
    const json& ecfg = section(cfg, "eval");
    const json& outcfg = section(cfg, "output");

    // Config first, so malformed keys exit 1 before any file is touched.
    const std::size_t order = data.value("order", std::size_t{2});
    const IndexPolicy policy = parse_index_policy(data.value("policy", std::string("increasing")));

    TrainConfig tc;
    GeneratingFunction g = parse_generating_function(lcfg.value("divergence", std::string("logistic")));
    g.tolerance = lcfg.value("tolerance", 0.0);
    tc.loss.divergence = g;
    tc.loss.eta_scale = lcfg.value("eta_scale", 1.0);
    tc.loss.clamp_margin = lcfg.value("clamp_margin", 1e-7);
    tc.loss.force = lcfg.value("force", false);
    tc.loss.threads = lcfg.value("threads", 1u);

    const std::string mode = scfg.value("mode", std::string("minibatch"));
    if (mode == "minibatch")
      tc.mode = TrainMode::Minibatch;
    else if (mode == "fullbatch")
      tc.mode = TrainMode::FullBatch;
    else
      throw ConfigError("sampler.mode must be minibatch or fullbatch");
    tc.sampler.v = scfg.value("v", order > 1 ? std::size_t{1} : std::size_t{0});
    tc.sampler.u = scfg.value("u", tc.sampler.v == 1 ? std::vector<std::size_t>{0} : std::vector<std::size_t>{});
    const std::string jdist = scfg.value("j_distribution", std::string("uniform"));
    if (jdist == "uniform")
      tc.sampler.j_distribution = JDistribution::Uniform;
    else if (jdist == "custom")
      tc.sampler.j_distribution = JDistribution::Custom;
    else
      throw ConfigError("sampler.j_distribution must be uniform or custom");
    tc.sampler.j_weights = scfg.value("j_weights", std::vector<double>{});
    tc.sampler.m_plus = scfg.value("m_plus", std::size_t{1});
    tc.sampler.m_minus = scfg.value("m_minus", std::size_t{5});
    tc.sampler.seed = scfg.value("seed", std::uint64_t{0});
    tc.sampler.exhaustive = scfg.value("exhaustive", false);
    tc.sampler.practical_scaling = scfg.value("practical_scaling", false);
    tc.sampler.allow_empty_positive = scfg.value("allow_empty_positive", false);
    tc.sampler.max_retries = scfg.value("max_retries", std::size_t{100});

    tc.schedule.kind = parse_schedule_kind(ocfg.value("schedule", std::string("adam")));
    tc.schedule.gamma = ocfg.value("gamma", 0.01);
    tc.schedule.beta1 = ocfg.value("beta1", 0.9);
    tc.schedule.beta2 = ocfg.value("beta2", 0.999);
    tc.schedule.adam_eps = ocfg.value("eps", 1e-8);
    tc.schedule.weight_decay = ocfg.value("weight_decay", 0.0);
    tc.schedule.T = ocfg.value("T", std::size_t{1000});
    tc.schedule.tau_sampling = ocfg.value("tau_sampling", false);
    tc.schedule.H_estimate = ocfg.value("H_estimate", 0.0);
    tc.schedule.validate();
    const std::string proj = ocfg.value("projection", std::string("none"));

    tc.eval_cadence = ecfg.value("cadence", std::size_t{50});
    tc.record_train_loss = ecfg.value("record_train_loss", true);
    const std::string metric = ecfg.value("metric", std::string("roc_auc"));
    if (metric != "roc_auc" && metric != "mse") throw ConfigError("eval.metric must be roc_auc or mse");
    const std::size_t per_anchor = ecfg.value("per_anchor", default_per_anchor(order));
    const std::uint64_t eval_seed = ecfg.value("seed", std::uint64_t{0});

    const std::string model_path = outcfg.value("model", std::string("model.json"));
    const std::string best_path = outcfg.value("best_model", std::string());
    const std::string history_path = outcfg.value("history", std::string());
    const std::string state_path = outcfg.value("optimizer_state", std::string());

    const std::string vectors = required(data, "data", "vectors");
    const std::string edges = required(data, "data", "edges");
    const Hypernetwork net = load_hypernetwork(vectors, edges, order, policy);

    std::optional<SimilarityModel> init;
    if (mcfg.contains("init")) {
      init.emplace(load_model(mcfg.at("init").get<std::string>()));
    } else {
      EmbeddingMap e{parse_embedding_kind(mcfg.value("kind", std::string("linear"))), net.dim(),
                     mcfg.value("K", std::size_t{4}), mcfg.value("H", std::size_t{0})};
      Rng rng(mcfg.value("seed", std::uint64_t{0}), 11);
      init.emplace(SimilarityModel::initialized(e, parse_link(mcfg.value("link", std::string("sigmoid"))), order, rng));
    }

    if (proj == "none")
      tc.projection = Projection::none();
    else if (proj == "nonnegative")
      tc.projection = Projection::non_negative();
    else if (proj == "box")
      tc.projection = Projection::box(std::vector<double>(init->param_count(), ocfg.value("box_lo", -1.0)),
                                      std::vector<double>(init->param_count(), ocfg.value("box_hi", 1.0)));
    else
      throw ConfigError("optimizer.projection must be none, nonnegative or box");

    std::optional<Validator> validator;
    if (data.contains("val_edges")) {
      const std::string val_vectors = data.value("val_vectors", vectors);
      const IndexPolicy val_policy = metric == "mse" ? IndexPolicy::Explicit : policy;
      Hypernetwork val = load_hypernetwork(val_vectors, data.at("val_edges").get<std::string>(), order, val_policy);
      validator = make_validator(metric, std::move(val), per_anchor, eval_seed, err);
    }

    TrainCallbacks cb;
    double best = std::numeric_limits<double>::quiet_NaN();
    if (validator) cb.validate = [&](const SimilarityModel& m) { return (*validator)(m); };
    cb.on_record = [&](const HistoryRow& row, const SimilarityModel& m) {
      if (!best_path.empty() && validator && std::isfinite(row.val_metric) &&
          (std::isnan(best) || validator->better(row.val_metric, best))) {
        best = row.val_metric;
        save_model(best_path, m);
      }
      return true;
    };

    TrainResult result = train(net, std::move(*init), tc, cb);
    save_model(model_path, result.model);
    if (!best_path.empty() && !validator) save_model(best_path, result.model);
    if (!history_path.empty()) write_history_csv(history_path, result.history);
    if (!state_path.empty()) write_text(state_path, adam_state_to_json(result.adam) + "\n");

    out << "trained " << result.iterations << " iterations";
    if (!result.history.empty()) {
      const auto& last = result.history.back();
      if (std::isfinite(last.train_loss)) out << ", train_loss=" << format_double(last.train_loss);
      if (std::isfinite(last.val_metric)) out << ", " << metric << "=" << format_double(last.val_metric);
    }
    if (std::isfinite(best)) out << ", best " << metric << "=" << format_double(best);
    out << '\n';
    return kOk;
  });
}

}  // namespace bhlr::cli
