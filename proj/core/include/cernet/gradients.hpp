#pragma once

#include <vector>

#include "cernet/model.hpp"

namespace cernet {

struct GradientOptions {
  // When false the posterior correction is treated as a constant offset
  // (stop-gradient ablation): no gradient flows through S^n or eps^n.
  bool through_posterior = true;
};

// Forward activations of one observed sequence, kept for the reverse pass.
// Reusable across calls; prepare() only reallocates when shapes change.
class SequenceTape {
 public:
  void prepare(const ModelConfig& config, int steps);

  int steps() const { return steps_; }
  const StepBuffers& step(int t) const { return buffers_[static_cast<std::size_t>(t)]; }

  // Per-step sensory and layer losses of the last forward pass.
  double sensory_loss(int t) const { return sensory_loss_[static_cast<std::size_t>(t)]; }

 private:
  friend double forward_sequence(const NetworkParams&, const ModelConfig&, const Vector&,
                                 const Eigen::Ref<const Matrix>&, SequenceTape&);
  friend void backward_sequence(const NetworkParams&, const ModelConfig&, const Vector&,
                                const Eigen::Ref<const Matrix>&, SequenceTape&,
                                NetworkParams*, Vector*, const GradientOptions&);

  const std::vector<Vector>& prev_posterior(int t) const;
  const std::vector<Vector>& prev_tanh_posterior(int t) const;

  int steps_ = 0;
  std::vector<int> shape_;
  std::vector<StepBuffers> buffers_;
  std::vector<Vector> zero_state_;
  std::vector<double> sensory_loss_;

  // reverse-pass scratch
  std::vector<Vector> g_post_, g_post_prev_, g_prior_, g_err_, g_drive_;
  Vector g_sensory_, scratch_d_;
};

// Runs rows of `observations` (T x D) through the network from the zero
// state with class embedding `c`, every step observed. Returns
//   L = 1/2 sum_t ( ||eps_t||^2 + sum_n lambda_n ||eps_t^n||^2 ).
double forward_sequence(const NetworkParams& params, const ModelConfig& config,
                        const Vector& c, const Eigen::Ref<const Matrix>& observations,
                        SequenceTape& tape);

// Reverse pass over the tape filled by forward_sequence with the same
// arguments. Adds dL/dtheta into *grad and dL/dc into *grad_c; either may be
// null.
void backward_sequence(const NetworkParams& params, const ModelConfig& config,
                       const Vector& c, const Eigen::Ref<const Matrix>& observations,
                       SequenceTape& tape, NetworkParams* grad, Vector* grad_c,
                       const GradientOptions& options = {});

}  // namespace cernet
