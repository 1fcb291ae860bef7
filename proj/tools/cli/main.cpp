#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace bhlr::cli;
  CLI::App app{"Bregman hyperlink regression: generate, train, predict and evaluate similarity models"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Sample a synthetic hypernetwork from a planted model");
  g->add_option("--n", gen.n, "Number of nodes");
  g->add_option("--order", gen.order, "Tuple order U");
  g->add_option("--p", gen.p, "Vector dimension");
  g->add_option("--K", gen.K, "Embedding dimension of the planted model");
  g->add_option("--H", gen.H, "Hidden width (mlp1)");
  g->add_option("--kind", gen.kind, "linear | mlp1");
  g->add_option("--link", gen.link, "identity | sigmoid | exp");
  g->add_option("--noise", gen.noise, "bernoulli | poisson | gaussian:<sigma>");
  g->add_option("--vector-law", gen.vector_law, "uniform | gaussian");
  g->add_option("--policy", gen.policy, "all | distinct | increasing");
  g->add_option("--theta-scale", gen.theta_scale, "Multiplier on the planted parameters");
  g->add_option("--seed", gen.seed);
  g->add_option("--out-vectors", gen.out_vectors)->required();
  g->add_option("--out-edges", gen.out_edges)->required();
  g->add_option("--out-model", gen.out_model, "Also write the planted model checkpoint");

  LiftArgs lift;
  auto* l = app.add_subcommand("lift", "Turn pairwise links into 3-way hyperlinks");
  l->add_option("--vectors", lift.vectors)->required();
  l->add_option("--edges", lift.edges)->required();
  l->add_option("--mode", lift.mode, "connected | fully_connected");
  l->add_option("--out-edges", lift.out_edges)->required();

  std::string config_path;
  std::vector<std::string> overrides;
  auto* t = app.add_subcommand("train", "Fit a similarity model");
  t->add_option("--config", config_path, "JSON config file");
  t->add_option("--set", overrides, "Override a config key: dotted.path=value")->take_all();

  PredictArgs pred;
  auto* p = app.add_subcommand("predict", "Score tuples with a trained model");
  p->add_option("--model", pred.model)->required();
  p->add_option("--vectors", pred.vectors)->required();
  p->add_option("--tuples", pred.tuples)->required();
  p->add_option("--out", pred.out, "Scores file (default: stdout)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Compute MSE or ROC-AUC of a model on a network");
  e->add_option("--model", ev.model)->required();
  e->add_option("--vectors", ev.vectors)->required();
  e->add_option("--edges", ev.edges)->required();
  e->add_option("--metric", ev.metric, "roc_auc | mse");
  e->add_option("--policy", ev.policy, "Index policy used for negatives");
  e->add_option("--per-anchor", ev.per_anchor, "Negatives per anchor node (default 10 for U=2, 15 otherwise)");
  e->add_option("--seed", ev.seed);
  e->add_option("--out", ev.out, "Metrics JSON (default: stdout)");

  GradcheckArgs gc;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference and sampler unbiasedness self-checks");
  c->add_option("--seed", gc.seed);
  c->add_option("--trials", gc.trials, "Random instances per configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kConfigError;
  }

  if (*g) return cmd_generate(gen, std::cout, std::cerr);
  if (*l) return cmd_lift(lift, std::cout, std::cerr);
  if (*t) {
    nlohmann::json cfg;
    const int rc = guarded(std::cerr, [&] {
      cfg = load_config(config_path, overrides);
      return 0;
    });
    if (rc != 0) return rc;
    return cmd_train(cfg, std::cout, std::cerr);
  }
  if (*p) return cmd_predict(pred, std::cout, std::cerr);
  if (*e) return cmd_eval(ev, std::cout, std::cerr);
  if (*c) return cmd_gradcheck(gc, std::cout, std::cerr);
  return kConfigError;
}
