#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cernet/checkpoint.hpp"
#include "cernet/gradients.hpp"
#include "cernet/model.hpp"

namespace cernet {

// Simulated stand-in for the robot arm that turns predictions into
// observations during closed-loop generation.
enum class PlantMode { Ideal, Noisy, Lagged };

std::string_view to_string(PlantMode mode);
PlantMode plant_mode_from_string(std::string_view name);

struct PlantConfig {
  PlantMode mode = PlantMode::Ideal;
  double sigma = 0.0;   // Noisy: per-dimension Gaussian std
  double lambda = 1.0;  // Lagged: first-order step toward the prediction
  std::uint64_t seed = 0;

  void validate() const;
};

class Plant {
 public:
  Plant(const PlantConfig& config, int dim);

  Vector observe(const Vector& prediction);

 private:
  PlantConfig config_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_;
  std::optional<Vector> position_;
};

// Additive offset on the observation channel for steps start..end inclusive.
struct PerturbationSchedule {
  int start_step = 0;
  int end_step = 0;
  Vector offset;

  bool active(int t) const { return t >= start_step && t <= end_step; }
  void validate(int steps, int dim) const;
};

struct InferenceConfig {
  double alpha_c = 2.5e-2;
  int n_iter = 15;
  double init_sigma = 0.1;
  std::uint64_t seed = 0;
  // false: replay priors only (no posterior correction) when reconstructing.
  bool replay_with_posterior = true;

  void validate() const;
};

struct StepSummary {
  int t = 0;
  double sensory_err_norm = 0.0;
  std::vector<double> layer_err_norms;
};

// Descending argsort of C; ties go to the lower index.
std::vector<int> rank_classes(const Vector& c);

struct InferenceTrace {
  std::vector<Vector> c_history;    // C after the update at each step
  std::vector<double> mse_history;  // L_past after the update at each step
  std::vector<int> ranking;
  double final_mse = 0.0;
  Matrix predictions;  // live one-step-ahead predictions
  std::vector<StepSummary> per_step;

  int top1() const { return ranking.at(0); }
  int top2() const { return ranking.size() > 1 ? ranking[1] : ranking.at(0); }
};

// Per-trial record for generation and inference runs.
struct RunReport {
  std::string trial_id;
  std::string mode;  // "generate" or "infer"
  std::string model;
  int class_true = -1;
  std::optional<int> class_top1;
  std::optional<int> class_top2;
  std::optional<double> final_mse;
  Matrix trajectory;   // observed positions, T x D
  Matrix predictions;  // network predictions, T x D
  std::vector<StepSummary> per_step;
  std::vector<Vector> c_history;
  std::vector<double> mse_history;
  std::vector<int> ranking;
  bool aborted = false;
  std::string failure;
};

std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);
void save_report(const RunReport& report, const std::filesystem::path& path);
RunReport load_report(const std::filesystem::path& path);

// Drives the plant from one_hot(k) for `steps` steps. Each step predicts,
// the plant answers (plus any perturbation offset), and the posterior
// correction is applied. Numeric failure aborts with a partial report.
RunReport generate_closed_loop(const Checkpoint& checkpoint, int k, int steps,
                               const PlantConfig& plant,
                               const std::optional<PerturbationSchedule>& perturb = {});

struct PastReconstruction {
  ClassEmbedding c;
  double mse = 0.0;                 // mean squared sensory error per element
  std::vector<Vector> live_state;   // posteriors at the last observed step
  Vector last_prediction;
};

// n_iter rounds of: replay observations from the zero state under C, then
// C <- C - alpha_c * (1/steps) * dL/dC. A final replay under the updated C
// yields the reconstruction MSE and the live state. Weights are untouched.
PastReconstruction past_reconstruction_update(const Checkpoint& checkpoint,
                                              const ClassEmbedding& c,
                                              const Eigen::Ref<const Matrix>& observations,
                                              const InferenceConfig& config,
                                              SequenceTape* tape = nullptr);

// Online class inference over an observation stream (rows = timesteps).
InferenceTrace infer_class(const Checkpoint& checkpoint, const Matrix& observations,
                           const InferenceConfig& config);

// Open-loop stream produced by the model itself for class k, optionally with
// Gaussian observation noise.
Matrix self_stream(const Checkpoint& checkpoint, int k, int steps, double noise_sigma,
                   std::uint64_t seed);

}  // namespace cernet
