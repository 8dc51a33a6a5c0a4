#include "cernet/gradients.hpp"

#include "cernet/errors.hpp"

namespace cernet {

namespace {

void size_layers(std::vector<Vector>& v, const ModelConfig& config) {
  v.resize(config.nodes.size());
  for (std::size_t n = 0; n < v.size(); ++n) v[n].resize(config.nodes[n]);
}

}  // namespace

void SequenceTape::prepare(const ModelConfig& config, int steps) {
  if (steps < 0) throw ArgumentError("negative sequence length");
  std::vector<int> shape = config.nodes;
  shape.push_back(config.output_dim);
  if (shape != shape_) {
    shape_ = std::move(shape);
    buffers_.clear();
    zero_state_ = initial_state(config);
    for (auto* v : {&g_post_, &g_post_prev_, &g_prior_, &g_err_, &g_drive_})
      size_layers(*v, config);
    g_sensory_.resize(config.output_dim);
  }
  while (static_cast<int>(buffers_.size()) < steps) {
    buffers_.emplace_back();
    buffers_.back().resize(config);
  }
  sensory_loss_.resize(static_cast<std::size_t>(steps));
  steps_ = steps;
}

const std::vector<Vector>& SequenceTape::prev_posterior(int t) const {
  return t == 0 ? zero_state_ : buffers_[static_cast<std::size_t>(t - 1)].posterior;
}

const std::vector<Vector>& SequenceTape::prev_tanh_posterior(int t) const {
  // tanh(0) == 0, so the zero state doubles as its own activation.
  return t == 0 ? zero_state_ : buffers_[static_cast<std::size_t>(t - 1)].tanh_posterior;
}

double forward_sequence(const NetworkParams& params, const ModelConfig& config,
                        const Vector& c, const Eigen::Ref<const Matrix>& observations,
                        SequenceTape& tape) {
  if (observations.cols() != config.output_dim)
    throw ArgumentError("observation width " + std::to_string(observations.cols()) +
                        " does not match output_dim " + std::to_string(config.output_dim));
  if (c.size() != config.num_classes) throw ArgumentError("class embedding size mismatch");
  const int T = static_cast<int>(observations.rows());
  tape.prepare(config, T);

  double loss = 0.0;
  for (int t = 0; t < T; ++t) {
    StepBuffers& s = tape.buffers_[static_cast<std::size_t>(t)];
    run_step(params, config, c, tape.prev_posterior(t), tape.prev_tanh_posterior(t),
             observations.row(t).data(), s);
    const double sensory = 0.5 * s.sensory_error.squaredNorm();
    double layer = 0.0;
    for (int n = 0; n < config.num_layers(); ++n)
      layer += config.loss_layer_weights[n] * s.error[n].squaredNorm();
    tape.sensory_loss_[static_cast<std::size_t>(t)] = sensory;
    loss += sensory + 0.5 * layer;
  }
  if (!std::isfinite(loss)) throw NumericError("non-finite prediction-error loss");
  return loss;
}

void backward_sequence(const NetworkParams& params, const ModelConfig& config,
                       const Vector& c, const Eigen::Ref<const Matrix>& observations,
                       SequenceTape& tape, NetworkParams* grad, Vector* grad_c,
                       const GradientOptions& options) {
  const int T = tape.steps();
  if (observations.rows() != T) throw ArgumentError("tape does not match observations");
  const int N = config.num_layers();
  const int top = config.top();
  const bool prior_t = config.topdown == TopdownSource::PriorT;

  auto& g_post = tape.g_post_;            // dL/dq_t, carried backwards in time
  auto& g_post_prev = tape.g_post_prev_;  // dL/dq_{t-1}
  auto& g_prior = tape.g_prior_;
  auto& g_err = tape.g_err_;
  auto& g_drive = tape.g_drive_;
  Vector& g_sensory = tape.g_sensory_;
  Vector& d = tape.scratch_d_;

  for (auto& v : g_post) v.setZero();

  for (int t = T - 1; t >= 0; --t) {
    const StepBuffers& s = tape.step(t);
    const auto& prev_tanh = tape.prev_tanh_posterior(t);

    // q^n = p^n - eps^n, loss holds lambda_n/2 ||eps^n||^2.
    for (int n = 0; n < N; ++n) {
      g_prior[n] = g_post[n];
      g_err[n] = config.loss_layer_weights[n] * s.error[n] - g_post[n];
    }

    g_sensory = s.sensory_error;
    if (options.through_posterior) {
      // eps^n = alpha_n (1 - tanh^2 p^n) * S^n, S^{n+1} = W_hh^n^T eps^n,
      // S^0 = W_o^T eps_t. Reverse of the bottom-up sweep.
      for (int n = N - 1; n >= 0; --n) {
        if (n < top) {
          if (grad) grad->W_hh[n].noalias() += s.error[n] * g_drive[n + 1].transpose();
          g_err[n].noalias() += params.W_hh[n] * g_drive[n + 1];
        }
        const double alpha = config.alpha_h[n];
        d = 1.0 - s.tanh_prior[n].array().square();
        g_drive[n] = alpha * d.array() * g_err[n].array();
        g_prior[n].array() += (alpha * s.drive[n].array() * g_err[n].array()) *
                              (-2.0 * s.tanh_prior[n].array() * d.array());
      }
      if (grad) grad->W_o.noalias() += s.sensory_error * g_drive[0].transpose();
      g_sensory.noalias() += params.W_o * g_drive[0];
    }

    // x = W_o tanh(p^0) + b_o, eps_t = x - observation.
    if (grad) {
      grad->W_o.noalias() += g_sensory * s.tanh_prior[0].transpose();
      grad->b_o += g_sensory;
    }
    d = 1.0 - s.tanh_prior[0].array().square();
    g_prior[0].array() += d.array() * (params.W_o.transpose() * g_sensory).array();

    // Priors were computed top-down, so walk bottom-up here.
    for (auto& v : g_post_prev) v.setZero();
    for (int n = 0; n < N; ++n) {
      const double inv_tau = 1.0 / config.tau[n];
      Vector& ga = g_prior[n];
      g_post_prev[n] += (1.0 - inv_tau) * ga;
      ga *= inv_tau;  // now dL/d(drive sum)

      if (grad) {
        grad->W_r[n].noalias() += ga * prev_tanh[n].transpose();
        grad->b_r[n] += ga;
      }
      d = 1.0 - prev_tanh[n].array().square();
      g_post_prev[n].array() += d.array() * (params.W_r[n].transpose() * ga).array();

      if (n == top) {
        if (grad) grad->W_c.noalias() += ga * c.transpose();
        if (grad_c) grad_c->noalias() += params.W_c.transpose() * ga;
      } else {
        const Vector& context = prior_t ? s.tanh_prior[n + 1] : prev_tanh[n + 1];
        if (grad) grad->W_hh[n].noalias() += ga * context.transpose();
        d = 1.0 - context.array().square();
        if (prior_t) {
          g_prior[n + 1].array() += d.array() * (params.W_hh[n].transpose() * ga).array();
        } else {
          g_post_prev[n + 1].array() +=
              d.array() * (params.W_hh[n].transpose() * ga).array();
        }
      }
    }
    std::swap(g_post, g_post_prev);
  }
}

}  // namespace cernet
