#include "cernet/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cernet/errors.hpp"

namespace cernet {

std::string_view to_string(PlantMode mode) {
  switch (mode) {
    case PlantMode::Ideal: return "ideal";
    case PlantMode::Noisy: return "noisy";
    case PlantMode::Lagged: return "lagged";
  }
  return "ideal";
}

PlantMode plant_mode_from_string(std::string_view name) {
  if (name == "ideal") return PlantMode::Ideal;
  if (name == "noisy") return PlantMode::Noisy;
  if (name == "lagged") return PlantMode::Lagged;
  throw ArgumentError("unknown plant mode '" + std::string(name) +
                      "' (expected ideal, noisy or lagged)");
}

void PlantConfig::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ArgumentError("plant sigma must be >= 0");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ArgumentError("plant lambda must lie in (0, 1]");
}

Plant::Plant(const PlantConfig& config, int dim)
    : config_(config), rng_(config.seed), noise_(0.0, 1.0) {
  config_.validate();
  if (dim < 1) throw ArgumentError("plant dimension must be >= 1");
}

Vector Plant::observe(const Vector& prediction) {
  switch (config_.mode) {
    case PlantMode::Ideal:
      return prediction;
    case PlantMode::Noisy: {
      Vector obs = prediction;
      for (Eigen::Index i = 0; i < obs.size(); ++i) obs[i] += config_.sigma * noise_(rng_);
      return obs;
    }
    case PlantMode::Lagged: {
      if (!position_) position_ = prediction;
      *position_ += config_.lambda * (prediction - *position_);
      return *position_;
    }
  }
  return prediction;
}

void PerturbationSchedule::validate(int steps, int dim) const {
  if (start_step < 0 || start_step > end_step || end_step >= steps)
    throw ArgumentError("perturbation window must satisfy 0 <= start <= end < steps");
  if (offset.size() != dim) throw ArgumentError("perturbation offset has the wrong dimension");
}

void InferenceConfig::validate() const {
  if (!(alpha_c >= 0.0) || !std::isfinite(alpha_c)) throw ArgumentError("alpha_c must be >= 0");
  if (n_iter < 1) throw ArgumentError("n_iter must be >= 1");
  if (!(init_sigma >= 0.0) || !std::isfinite(init_sigma))
    throw ArgumentError("init_sigma must be >= 0");
}

std::vector<int> rank_classes(const Vector& c) {
  std::vector<int> order(static_cast<std::size_t>(c.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return c[a] > c[b]; });
  return order;
}

namespace {

StepSummary summarize(const StepRecord& rec) {
  StepSummary s;
  s.t = rec.t;
  s.sensory_err_norm = rec.sensory_error ? rec.sensory_error->norm() : 0.0;
  for (const auto& layer : rec.layers) s.layer_err_norms.push_back(layer.error.norm());
  return s;
}

}  // namespace

RunReport generate_closed_loop(const Checkpoint& checkpoint, int k, int steps,
                               const PlantConfig& plant_config,
                               const std::optional<PerturbationSchedule>& perturb) {
  const ModelConfig& config = checkpoint.config;
  const NetworkParams& params = checkpoint.params;
  if (steps < 1) throw ArgumentError("generation needs at least one step");
  if (perturb) perturb->validate(steps, config.output_dim);
  const ClassEmbedding c = one_hot(k, config.num_classes);
  Plant plant(plant_config, config.output_dim);

  RunReport report;
  report.mode = "generate";
  report.class_true = k;
  report.trajectory = Matrix::Zero(steps, config.output_dim);
  report.predictions = Matrix::Zero(steps, config.output_dim);

  std::vector<Vector> state = initial_state(config);
  int t = 0;
  try {
    for (; t < steps; ++t) {
      StepRecord rec = rollout_step(params, config, c, state, std::nullopt, t);
      Vector obs = plant.observe(rec.prediction);
      if (perturb && perturb->active(t)) obs += perturb->offset;
      rec.observation = obs;
      posterior_update(params, config, rec);
      report.predictions.row(t) = rec.prediction.transpose();
      report.trajectory.row(t) = obs.transpose();
      report.per_step.push_back(summarize(rec));
      state = rec.posteriors();
    }
  } catch (const NumericError& e) {
    report.aborted = true;
    report.failure = "step " + std::to_string(t) + ": " + e.what();
    report.trajectory.conservativeResize(t, Eigen::NoChange);
    report.predictions.conservativeResize(t, Eigen::NoChange);
  }
  return report;
}

PastReconstruction past_reconstruction_update(const Checkpoint& checkpoint,
                                              const ClassEmbedding& c,
                                              const Eigen::Ref<const Matrix>& observations,
                                              const InferenceConfig& config,
                                              SequenceTape* tape) {
  config.validate();
  const NetworkParams& params = checkpoint.params;
  if (observations.rows() < 1) throw ArgumentError("past reconstruction needs observations");
  if (c.size() != checkpoint.config.num_classes)
    throw ArgumentError("class embedding size mismatch");

  ModelConfig replay_config = checkpoint.config;
  if (!config.replay_with_posterior)
    std::fill(replay_config.alpha_h.begin(), replay_config.alpha_h.end(), 0.0);

  SequenceTape local;
  SequenceTape& tp = tape ? *tape : local;
  const double steps = static_cast<double>(observations.rows());

  PastReconstruction out;
  out.c = c;
  Vector grad_c(c.size());
  for (int it = 0; it < config.n_iter; ++it) {
    forward_sequence(params, replay_config, out.c.values, observations, tp);
    grad_c.setZero();
    backward_sequence(params, replay_config, out.c.values, observations, tp, nullptr, &grad_c);
    if (!grad_c.allFinite()) throw NumericError("non-finite gradient with respect to C");
    out.c.values -= (config.alpha_c / steps) * grad_c;
  }

  forward_sequence(params, replay_config, out.c.values, observations, tp);
  double sq = 0.0;
  for (int t = 0; t < tp.steps(); ++t) sq += tp.step(t).sensory_error.squaredNorm();
  out.mse = sq / (steps * static_cast<double>(checkpoint.config.output_dim));
  const StepBuffers& last = tp.step(tp.steps() - 1);
  out.live_state = last.posterior;
  out.last_prediction = last.prediction;
  return out;
}

InferenceTrace infer_class(const Checkpoint& checkpoint, const Matrix& observations,
                           const InferenceConfig& config) {
  config.validate();
  const ModelConfig& mc = checkpoint.config;
  if (observations.cols() != mc.output_dim)
    throw ArgumentError("observation dimension " + std::to_string(observations.cols()) +
                        " does not match model output_dim " + std::to_string(mc.output_dim));
  if (observations.rows() < 1) throw ArgumentError("empty observation stream");

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ClassEmbedding c = ClassEmbedding::zeros(mc.num_classes);
  for (Eigen::Index i = 0; i < c.values.size(); ++i) c.values[i] = config.init_sigma * normal(rng);

  const int T = static_cast<int>(observations.rows());
  InferenceTrace trace;
  trace.predictions = Matrix::Zero(T, mc.output_dim);
  std::vector<Vector> live = initial_state(mc);
  SequenceTape tape;

  for (int t = 0; t < T; ++t) {
    const Vector obs = observations.row(t).transpose();
    StepRecord rec = rollout_step(checkpoint.params, mc, c, live, obs, t);
    trace.predictions.row(t) = rec.prediction.transpose();
    trace.per_step.push_back(summarize(rec));

    PastReconstruction pr =
        past_reconstruction_update(checkpoint, c, observations.topRows(t + 1), config, &tape);
    c = std::move(pr.c);
    live = std::move(pr.live_state);
    trace.c_history.push_back(c.values);
    trace.mse_history.push_back(pr.mse);
  }
  trace.ranking = rank_classes(c.values);
  trace.final_mse = trace.mse_history.back();
  return trace;
}

Matrix self_stream(const Checkpoint& checkpoint, int k, int steps, double noise_sigma,
                   std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw ArgumentError("noise sigma must be >= 0");
  const RunReport clean = generate_closed_loop(checkpoint, k, steps, PlantConfig{});
  if (clean.aborted) throw NumericError("self stream diverged: " + clean.failure);
  Matrix stream = clean.trajectory;
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < stream.size(); ++i) stream.data()[i] += noise_sigma * normal(rng);
  }
  return stream;
}

}  // namespace cernet
