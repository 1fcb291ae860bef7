#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bhlr/hypernet.hpp"
#include "bhlr/loss.hpp"
#include "bhlr/random.hpp"
#include "bhlr/sampler.hpp"
#include "bhlr/simfn.hpp"

namespace bhlr {

enum class ScheduleKind { Constant, InverseT, Adam };

ScheduleKind parse_schedule_kind(std::string_view key);
std::string to_string(ScheduleKind kind);

struct Schedule {
  ScheduleKind kind = ScheduleKind::Constant;
  /// Step size (SGD) or learning rate (Adam).
  double gamma = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  std::size_t T = 100;
  bool tau_sampling = false;
  double H_estimate = 0.0;

  /// gamma, or gamma / t for InverseT.
  double step_size(std::size_t t) const;
  void validate() const;
};

enum class ProjectionKind { None, NonNegative, Box };

struct Projection {
  ProjectionKind kind = ProjectionKind::None;
  std::vector<double> lo;
  std::vector<double> hi;

  static Projection none() { return {}; }
  static Projection non_negative() { return {ProjectionKind::NonNegative, {}, {}}; }
  static Projection box(std::vector<double> lo, std::vector<double> hi);

  /// Euclidean projection onto the feasible set, in place.
  void apply(std::span<double> theta) const;
};

/// theta - step(t) * (grad + weight_decay * theta), then projected.
std::vector<double> sgd_step(std::span<const double> theta, std::span<const double> grad, const Schedule& schedule,
                             std::size_t t, const Projection& projection = {});

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t t = 0;
};

/// Bias-corrected Adam update followed by projection. Updates `state`.
std::vector<double> adam_step(AdamState& state, std::span<const double> theta, std::span<const double> grad,
                              std::size_t t, const Schedule& schedule, const Projection& projection = {});

std::string adam_state_to_json(const AdamState& state);
AdamState adam_state_from_json(std::string_view text);

/// P(tau = t) proportional to 2 gamma / t - H gamma^2 / t^2 for t in [1, T].
std::vector<double> tau_distribution(const Schedule& schedule);
std::size_t sample_tau(const Schedule& schedule, Rng& rng);

enum class TrainMode { FullBatch, Minibatch };

struct TrainConfig {
  TrainMode mode = TrainMode::FullBatch;
  LossSpec loss;
  SamplerConfig sampler;
  Schedule schedule;
  Projection projection;
  /// Iterations between history rows.
  std::size_t eval_cadence = 50;
  /// Compute the full training loss for each history row. When false the
  /// train_loss column is NaN.
  bool record_train_loss = true;
};

struct HistoryRow {
  std::size_t iter = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  double elapsed_ms = 0.0;
};

struct TrainCallbacks {
  /// Validation metric for the current parameters; NaN when absent.
  std::function<double(const SimilarityModel&)> validate;
  /// Called for each history row. Returning false stops training early.
  std::function<bool(const HistoryRow&, const SimilarityModel&)> on_record;
};

struct TrainResult {
  SimilarityModel model;
  std::vector<HistoryRow> history;
  std::size_t iterations = 0;
  bool stopped_early = false;
  AdamState adam;
};

/// Projected SGD / Adam over full-batch or sampled gradients.
///
/// Runs schedule.T iterations, or a tau drawn by sample_tau. With
/// sampler.practical_scaling the weight scale eta is fixed to 1. Deterministic
/// for a given sampler.seed when loss.threads == 1.
TrainResult train(const Hypernetwork& net, SimilarityModel init, const TrainConfig& config,
                  const TrainCallbacks& callbacks = {});

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history);

}  // namespace bhlr
