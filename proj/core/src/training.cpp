#include "cernet/training.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cernet/dataset.hpp"
#include "cernet/errors.hpp"

namespace cernet {

void TrainConfig::validate() const {
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ArgumentError("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ArgumentError("beta2 must lie in (0, 1)");
  if (!(adam_eps > 0.0)) throw ArgumentError("adam epsilon must be > 0");
  if (!(grad_clip > 0.0)) throw ArgumentError("gradient clip norm must be > 0");
}

OptimizerState OptimizerState::for_size(std::size_t n) {
  const auto len = static_cast<Eigen::Index>(n);
  return OptimizerState{Vector::Zero(len), Vector::Zero(len), 0};
}

double TrainTrace::best_loss() const {
  if (best_epoch < 0) return std::numeric_limits<double>::quiet_NaN();
  return total_loss[static_cast<std::size_t>(best_epoch)];
}

std::string TrainTrace::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,total_loss";
  const std::size_t K = class_loss.empty() ? 0 : class_loss[0].size();
  for (std::size_t k = 0; k < K; ++k) out << ",class_" << k;
  out << '\n';
  for (std::size_t e = 0; e < total_loss.size(); ++e) {
    out << e << ',' << total_loss[e];
    for (double l : class_loss[e]) out << ',' << l;
    out << '\n';
  }
  return out.str();
}

double prediction_error_loss(std::span<const StepRecord> steps,
                             std::span<const double> loss_layer_weights) {
  double loss = 0.0;
  for (const auto& step : steps) {
    if (!step.sensory_error)
      throw ArgumentError("step " + std::to_string(step.t) + " has no observation");
    if (step.layers.size() != loss_layer_weights.size())
      throw ArgumentError("loss_layer_weights must have one entry per layer");
    double term = step.sensory_error->squaredNorm();
    for (std::size_t n = 0; n < step.layers.size(); ++n)
      term += loss_layer_weights[n] * step.layers[n].error.squaredNorm();
    loss += 0.5 * term;
  }
  return loss;
}

LossAndGradient bptt_gradients(const NetworkParams& params, const ModelConfig& config,
                               const Matrix& sequence, const ClassEmbedding& c,
                               const GradientOptions& options) {
  params.check_shapes(config);
  NetworkParams grad = NetworkParams::zeros(config);
  LossAndGradient out;
  if (sequence.rows() > 0) {
    SequenceTape tape;
    out.loss = forward_sequence(params, config, c.values, sequence, tape);
    backward_sequence(params, config, c.values, sequence, tape, &grad, nullptr, options);
  }
  out.gradient = grad.flatten();
  for (Eigen::Index i = 0; i < out.gradient.size(); ++i) {
    if (!std::isfinite(out.gradient[i]))
      throw NumericError("non-finite gradient for parameter " +
                         grad.name_at(static_cast<std::size_t>(i)));
  }
  return out;
}

Vector clip_gradient(const Vector& gradient, double max_norm, double eps) {
  const double scale = std::min(1.0, max_norm / (gradient.norm() + eps));
  return gradient * scale;
}

void clip_and_adam_step(Vector& theta, OptimizerState& opt, const Vector& gradient,
                        const TrainConfig& config) {
  if (theta.size() != gradient.size() || opt.m.size() != gradient.size() ||
      opt.v.size() != gradient.size())
    throw ArgumentError("parameter, gradient and optimizer sizes differ");
  const Vector g = clip_gradient(gradient, config.grad_clip, config.adam_eps);
  opt.step_count += 1;
  opt.m = config.beta1 * opt.m + (1.0 - config.beta1) * g;
  opt.v = config.beta2 * opt.v + (1.0 - config.beta2) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(opt.step_count));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(opt.step_count));
  theta.array() -= config.learning_rate * (opt.m.array() / bc1) /
                   ((opt.v.array() / bc2).sqrt() + config.adam_eps);
}

std::vector<double> evaluate_class_losses(const NetworkParams& params,
                                          const ModelConfig& config,
                                          const data::TrajectoryDataset& dataset) {
  SequenceTape tape;
  std::vector<double> losses;
  for (int k = 0; k < dataset.num_classes(); ++k) {
    const ClassEmbedding c = one_hot(k, config.num_classes);
    losses.push_back(
        forward_sequence(params, config, c.values, dataset.classes[k].points, tape));
  }
  return losses;
}

TrainResult train(const data::TrajectoryDataset& dataset, const ModelConfig& config,
                  const TrainConfig& train_config,
                  const std::function<void(int, double)>& on_epoch) {
  dataset.validate();
  config.validate();
  train_config.validate();
  if (dataset.num_classes() != config.num_classes)
    throw ArgumentError("dataset has " + std::to_string(dataset.num_classes()) +
                        " classes but the model expects " +
                        std::to_string(config.num_classes));
  if (dataset.dim() != config.output_dim)
    throw ArgumentError("dataset dimension " + std::to_string(dataset.dim()) +
                        " does not match output_dim " + std::to_string(config.output_dim));

  NetworkParams params = NetworkParams::random_init(config, train_config.seed);
  NetworkParams grad = NetworkParams::zeros(config);
  Vector theta = params.flatten();
  OptimizerState opt = OptimizerState::for_size(params.size());

  std::vector<ClassEmbedding> embeddings;
  for (int k = 0; k < config.num_classes; ++k) embeddings.push_back(one_hot(k, config.num_classes));

  TrainResult result;
  result.checkpoint = Checkpoint{config, params};
  auto& trace = result.trace;
  SequenceTape tape;
  double best = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    grad.set_zero();
    double total = 0.0;
    std::vector<double> per_class;
    per_class.reserve(static_cast<std::size_t>(config.num_classes));
    try {
      for (int k = 0; k < config.num_classes; ++k) {
        const Matrix& seq = dataset.classes[k].points;
        const double loss = forward_sequence(params, config, embeddings[k].values, seq, tape);
        backward_sequence(params, config, embeddings[k].values, seq, tape, &grad, nullptr,
                          train_config.gradients);
        per_class.push_back(loss);
        total += loss;
      }
    } catch (const NumericError& e) {
      result.diverged = true;
      result.failure = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }

    const Vector g = grad.flatten();
    if (!std::isfinite(total) || !g.allFinite()) {
      result.diverged = true;
      result.failure = "epoch " + std::to_string(epoch) + ": non-finite loss or gradient";
      break;
    }
    trace.total_loss.push_back(total);
    trace.class_loss.push_back(std::move(per_class));
    if (total < best) {
      best = total;
      trace.best_epoch = epoch;
      result.checkpoint.params = params;
    }
    if (on_epoch) on_epoch(epoch, total);

    clip_and_adam_step(theta, opt, g, train_config);
    params.unflatten(theta);
  }
  return result;
}

}  // namespace cernet
