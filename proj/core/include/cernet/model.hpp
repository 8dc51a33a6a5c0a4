#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cernet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Which activity of layer n+1 feeds the top-down term of layer n's prior.
//   PriorT:           the layer-above prior computed earlier in the same sweep.
//   PosteriorTMinus1: the layer-above posterior from the previous step.
enum class TopdownSource { PriorT, PosteriorTMinus1 };

std::string_view to_string(TopdownSource source);
TopdownSource topdown_source_from_string(std::string_view name);

// Layer 0 is the bottom (output) layer; layer num_layers()-1 receives the
// class embedding.
struct ModelConfig {
  std::vector<int> nodes;
  std::vector<double> tau;
  std::vector<double> alpha_h;
  int num_classes = 1;
  int output_dim = 3;
  // Weight of each layer's ||eps^n||^2 term in the prediction-error loss.
  std::vector<double> loss_layer_weights;
  TopdownSource topdown = TopdownSource::PriorT;

  int num_layers() const { return static_cast<int>(nodes.size()); }
  int top() const { return num_layers() - 1; }

  // Throws ArgumentError on any violated invariant.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// Builds a config from per-layer vectors; loss_layer_weights default to 1.
ModelConfig make_config(std::vector<int> nodes, std::vector<double> tau,
                        std::vector<double> alpha_h, int num_classes, int output_dim);

// The six named configurations A-F (SingleMini ... MultiLarge).
std::span<const std::string_view> preset_names();
ModelConfig preset(std::string_view name, int num_classes = 26, int output_dim = 3);

// Trainable parameters. Matrices are stored (out x in) so that each term
// of the dynamics is W * v in column-vector form:
//   W_o  : D x nodes_0            b_o : D
//   W_c  : nodes_top x K
//   W_hh : nodes_n x nodes_{n+1}, n = 0..N-2
//   W_r  : nodes_n x nodes_n      b_r : nodes_n
// flatten() lays them out as [W_o, b_o, W_c, W_hh..., W_r..., b_r...],
// matrices row-major.
struct NetworkParams {
  Matrix W_o;
  Vector b_o;
  Matrix W_c;
  std::vector<Matrix> W_hh;
  std::vector<Matrix> W_r;
  std::vector<Vector> b_r;

  static NetworkParams zeros(const ModelConfig& config);
  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per matrix, zero biases.
  static NetworkParams random_init(const ModelConfig& config, std::uint64_t seed);

  std::size_t size() const;
  Vector flatten() const;
  void unflatten(const Vector& flat);

  // Name of the tensor holding flat element `index`, e.g. "W_r[1]".
  std::string name_at(std::size_t index) const;

  void check_shapes(const ModelConfig& config) const;
  bool all_finite() const;

  NetworkParams& set_zero();
  bool operator==(const NetworkParams& other) const;
};

std::size_t parameter_count(const ModelConfig& config);

struct ClassEmbedding {
  Vector values;

  static ClassEmbedding zeros(int num_classes);
  int size() const { return static_cast<int>(values.size()); }
};

ClassEmbedding one_hot(int k, int num_classes);

struct LayerState {
  Vector prior;
  Vector posterior;
  Vector error;  // prior - posterior
};

struct StepRecord {
  int t = 0;
  std::vector<LayerState> layers;
  Vector prediction;
  std::optional<Vector> observation;
  std::optional<Vector> sensory_error;  // prediction - observation

  std::vector<Vector> posteriors() const;
};

// Zero hidden state for every layer; the state before the first step.
std::vector<Vector> initial_state(const ModelConfig& config);

// Prior of layer n. prev_posteriors[n] is layer n's posterior at t-1;
// topdown_context[n+1] is the layer-above activity (pre-tanh) selected by
// config.topdown, ignored for the top layer.
Vector forward_prior(const NetworkParams& params, const ModelConfig& config,
                     std::span<const Vector> prev_posteriors,
                     std::span<const Vector> topdown_context, const ClassEmbedding& c,
                     int n);

Vector output_prediction(const NetworkParams& params, const Vector& h_prior_bottom);

// Bottom-up posterior correction for every layer of `step`. Requires the
// priors and prediction to be filled in. Without an observation the
// posteriors are copies of the priors.
void posterior_update(const NetworkParams& params, const ModelConfig& config,
                      StepRecord& step);

// One full timestep: priors top-down, prediction, then posterior correction
// against `observation` when present.
StepRecord rollout_step(const NetworkParams& params, const ModelConfig& config,
                        const ClassEmbedding& c, std::span<const Vector> prev_posteriors,
                        const std::optional<Vector>& observation, int t = 0);

// Allocation-free step kernel shared by rollout_step and the gradient tape.
// Buffers are sized once by resize() and overwritten by run_step().
struct StepBuffers {
  std::vector<Vector> prior;
  std::vector<Vector> tanh_prior;
  std::vector<Vector> posterior;
  std::vector<Vector> tanh_posterior;
  std::vector<Vector> error;
  std::vector<Vector> drive;  // S^n: the error signal driving layer n
  Vector prediction;
  Vector sensory_error;
  bool observed = false;

  void resize(const ModelConfig& config);
};

// prev_posterior / prev_tanh_posterior come from the previous step's buffers
// (or the zero state). observation == nullptr means unobserved.
void run_step(const NetworkParams& params, const ModelConfig& config, const Vector& c,
              std::span<const Vector> prev_posterior,
              std::span<const Vector> prev_tanh_posterior, const double* observation,
              StepBuffers& out);

}  // namespace cernet
