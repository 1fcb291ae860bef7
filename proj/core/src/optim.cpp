#include "bhlr/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "bhlr/errors.hpp"

namespace bhlr {
namespace {

void check_finite(std::span<const double> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i])) throw NonFiniteGradient("gradient component " + std::to_string(i) + " is not finite");
}

void check_lengths(std::span<const double> theta, std::span<const double> grad) {
  if (theta.size() != grad.size()) throw LengthMismatch("theta and gradient differ in length");
}

}  // namespace

ScheduleKind parse_schedule_kind(std::string_view key) {
  if (key == "constant") return ScheduleKind::Constant;
  if (key == "inverse_t") return ScheduleKind::InverseT;
  if (key == "adam") return ScheduleKind::Adam;
  throw ConfigError("unknown schedule '" + std::string(key) + "' (constant|inverse_t|adam)");
}

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Constant: return "constant";
    case ScheduleKind::InverseT: return "inverse_t";
    case ScheduleKind::Adam: return "adam";
  }
  return "?";
}

double Schedule::step_size(std::size_t t) const {
  if (t == 0) throw OutOfRange("iteration counter starts at 1");
  return kind == ScheduleKind::InverseT ? gamma / static_cast<double>(t) : gamma;
}

void Schedule::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("step size gamma must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (kind == ScheduleKind::Adam) {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0)) throw ConfigError("Adam eps must be positive");
  }
  if (tau_sampling) {
    if (!(H_estimate > 0.0)) throw ConfigError("tau_sampling needs a positive H_estimate");
    if (!(gamma < 2.0 / H_estimate)) throw ConfigError("tau_sampling needs gamma < 2 / H_estimate");
  }
}

Projection Projection::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != hi.size()) throw LengthMismatch("box bounds differ in length");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i])) throw ConfigError("box bound lo > hi at coordinate " + std::to_string(i));
  return {ProjectionKind::Box, std::move(lo), std::move(hi)};
}

void Projection::apply(std::span<double> theta) const {
  switch (kind) {
    case ProjectionKind::None:
      return;
    case ProjectionKind::NonNegative:
      for (double& x : theta) x = std::max(x, 0.0);
      return;
    case ProjectionKind::Box:
      if (lo.size() != theta.size()) throw LengthMismatch("box bounds do not match the parameter count");
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = std::clamp(theta[i], lo[i], hi[i]);
      return;
  }
}

std::vector<double> sgd_step(std::span<const double> theta, std::span<const double> grad, const Schedule& schedule,
                             std::size_t t, const Projection& projection) {
  check_lengths(theta, grad);
  check_finite(grad);
  const double step = schedule.step_size(t);
  std::vector<double> out(theta.begin(), theta.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= step * (grad[i] + schedule.weight_decay * theta[i]);
  projection.apply(out);
  return out;
}

std::vector<double> adam_step(AdamState& state, std::span<const double> theta, std::span<const double> grad,
                              std::size_t t, const Schedule& s, const Projection& projection) {
  check_lengths(theta, grad);
  check_finite(grad);
  if (t == 0) throw OutOfRange("iteration counter starts at 1");
  if (state.m.empty()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
  }
  if (state.m.size() != theta.size()) throw LengthMismatch("Adam state does not match the parameter count");
  state.t = t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(t));
  std::vector<double> out(theta.begin(), theta.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double g = grad[i] + s.weight_decay * theta[i];
    state.m[i] = s.beta1 * state.m[i] + (1.0 - s.beta1) * g;
    state.v[i] = s.beta2 * state.v[i] + (1.0 - s.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    out[i] -= s.gamma * mhat / (std::sqrt(vhat) + s.adam_eps);
  }
  projection.apply(out);
  return out;
}

std::string adam_state_to_json(const AdamState& state) {
  nlohmann::json j;
  j["t"] = state.t;
  j["m"] = state.m;
  j["v"] = state.v;
  return j.dump();
}

AdamState adam_state_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    AdamState s;
    s.t = j.at("t").get<std::size_t>();
    s.m = j.at("m").get<std::vector<double>>();
    s.v = j.at("v").get<std::vector<double>>();
    if (s.m.size() != s.v.size()) throw ConfigError("optimizer state moments differ in length");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed optimizer state: ") + e.what());
  }
}

std::vector<double> tau_distribution(const Schedule& s) {
  if (s.T == 0) throw ConfigError("T must be >= 1");
  if (!(s.gamma > 0.0)) throw ConfigError("step size gamma must be positive");
  if (!(s.H_estimate > 0.0)) throw ConfigError("tau sampling needs a positive H_estimate");
  if (!(s.gamma < 2.0 / s.H_estimate)) throw ConfigError("tau sampling needs gamma < 2 / H_estimate");
  std::vector<double> mass(s.T);
  for (std::size_t t = 1; t <= s.T; ++t) {
    const double tt = static_cast<double>(t);
    mass[t - 1] = 2.0 * s.gamma / tt - s.H_estimate * s.gamma * s.gamma / (tt * tt);
  }
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (double& m : mass) m /= total;
  return mass;
}

std::size_t sample_tau(const Schedule& s, Rng& rng) {
  const auto mass = tau_distribution(s);
  const double r = rng.uniform01();
  double acc = 0.0;
  for (std::size_t t = 0; t < mass.size(); ++t) {
    acc += mass[t];
    if (r < acc) return t + 1;
  }
  return mass.size();
}

TrainResult train(const Hypernetwork& net, SimilarityModel init, const TrainConfig& config,
                  const TrainCallbacks& callbacks) {
  config.schedule.validate();
  if (config.eval_cadence == 0) throw ConfigError("eval_cadence must be >= 1");

  LossSpec loss = config.loss;
  if (config.mode == TrainMode::Minibatch && config.sampler.practical_scaling) loss.eta_scale = 1.0;
  validate(loss, init, net);

  std::optional<MinibatchSampler> sampler;
  if (config.mode == TrainMode::Minibatch) sampler.emplace(net, config.sampler);

  Rng draw_rng(config.sampler.seed, 1);
  Rng tau_rng(config.sampler.seed, 2);
  const std::size_t iterations =
      config.schedule.tau_sampling ? sample_tau(config.schedule, tau_rng) : config.schedule.T;

  TrainResult result{std::move(init), {}, 0, false, {}};
  SimilarityModel& model = result.model;
  const auto start = std::chrono::steady_clock::now();

  auto record = [&](std::size_t iter) {
    HistoryRow row;
    row.iter = iter;
    row.train_loss = config.record_train_loss ? full_loss(loss, model, net) : std::numeric_limits<double>::quiet_NaN();
    if (config.record_train_loss && !std::isfinite(row.train_loss)) throw DomainError("training loss is not finite");
    row.val_metric = callbacks.validate ? callbacks.validate(model) : std::numeric_limits<double>::quiet_NaN();
    row.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(row);
    return callbacks.on_record ? callbacks.on_record(row, model) : true;
  };

  for (std::size_t t = 1; t <= iterations; ++t) {
    std::vector<double> grad;
    if (sampler) {
      const Minibatch mb = sampler->draw(draw_rng);
      grad = stochastic_gradient(loss, model, net, mb);
    } else {
      grad = full_gradient(loss, model, net);
    }
    const auto theta = model.theta();
    std::vector<double> next = config.schedule.kind == ScheduleKind::Adam
                                   ? adam_step(result.adam, theta, grad, t, config.schedule, config.projection)
                                   : sgd_step(theta, grad, config.schedule, t, config.projection);
    model.set_theta(std::move(next));
    result.iterations = t;
    if (t % config.eval_cadence == 0 || t == iterations) {
      if (!record(t)) {
        result.stopped_early = true;
        break;
      }
    }
  }
  return result;
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
  out << "iter,train_loss,val_metric,elapsed_ms\n";
  for (const auto& r : history)
    out << r.iter << ',' << format_double(r.train_loss) << ',' << format_double(r.val_metric) << ','
        << format_double(r.elapsed_ms) << '\n';
}

}  // namespace bhlr
