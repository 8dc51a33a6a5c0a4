#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cernet/checkpoint.hpp"
#include "cernet/gradients.hpp"
#include "cernet/model.hpp"

namespace cernet {

namespace data {
struct TrajectoryDataset;
}

struct TrainConfig {
  int epochs = 10000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-6;
  double grad_clip = 1.0;
  std::uint64_t seed = 0;
  GradientOptions gradients;

  void validate() const;
};

struct OptimizerState {
  Vector m;
  Vector v;
  long step_count = 0;

  static OptimizerState for_size(std::size_t n);
};

struct TrainTrace {
  std::vector<double> total_loss;
  std::vector<std::vector<double>> class_loss;  // [epoch][class]
  int best_epoch = -1;

  double best_loss() const;
  // CSV: epoch,total_loss,class_0,...,class_{K-1}
  std::string to_csv() const;
};

struct TrainResult {
  Checkpoint checkpoint;  // parameters from the minimum-loss epoch
  TrainTrace trace;
  bool diverged = false;
  std::string failure;
};

// L = 1/2 sum_t ( ||eps_t||^2 + sum_n w_n ||eps_t^n||^2 ). Every step must
// carry an observation.
double prediction_error_loss(std::span<const StepRecord> steps,
                             std::span<const double> loss_layer_weights);

struct LossAndGradient {
  double loss = 0.0;
  Vector gradient;  // flattened in NetworkParams::flatten() order
};

// Exact gradient of the loss of one sequence (rows = timesteps) under class
// embedding c, through the unrolled prior/posterior dynamics. Throws
// NumericError naming the first non-finite parameter gradient.
LossAndGradient bptt_gradients(const NetworkParams& params, const ModelConfig& config,
                               const Matrix& sequence, const ClassEmbedding& c,
                               const GradientOptions& options = {});

// Global L2-norm clipping followed by one bias-corrected Adam step on the
// flattened parameter vector `theta`.
void clip_and_adam_step(Vector& theta, OptimizerState& opt, const Vector& gradient,
                        const TrainConfig& config);

// g * min(1, G_max / (||g||_2 + eps)).
Vector clip_gradient(const Vector& gradient, double max_norm, double eps);

// Full-batch training: one update per epoch over all classes of the
// dataset. `on_epoch` (optional) sees (epoch, total_loss).
TrainResult train(const data::TrajectoryDataset& dataset, const ModelConfig& config,
                  const TrainConfig& train_config,
                  const std::function<void(int, double)>& on_epoch = {});

// Loss of every class of the dataset under its one-hot embedding.
std::vector<double> evaluate_class_losses(const NetworkParams& params,
                                          const ModelConfig& config,
                                          const data::TrajectoryDataset& dataset);

}  // namespace cernet
