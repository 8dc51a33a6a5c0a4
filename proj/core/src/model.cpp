#include "cernet/model.hpp"

#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "cernet/errors.hpp"

namespace cernet {

namespace {

struct PresetRow {
  std::string_view name;
  std::vector<int> nodes;
  std::vector<double> tau;
  std::vector<double> alpha_h;
};

const std::vector<PresetRow>& preset_table() {
  static const std::vector<PresetRow> rows = {
      {"SingleMini", {50}, {10}, {1e-2}},
      {"SingleStandard", {150}, {10}, {1e-2}},
      {"SingleLarge", {300}, {10}, {1e-2}},
      {"MultiMini", {50, 15, 7}, {10, 20, 40}, {1e-2, 5e-4, 5e-6}},
      {"MultiStandard", {120, 40, 20}, {10, 20, 40}, {1e-2, 5e-4, 5e-6}},
      {"MultiLarge", {250, 70, 20}, {10, 20, 40}, {1e-2, 5e-4, 5e-6}},
  };
  return rows;
}

const std::array<std::string_view, 6> kPresetNames = {
    "SingleMini", "SingleStandard", "SingleLarge",
    "MultiMini",  "MultiStandard",  "MultiLarge"};

// Portable uniform double in [0, 1).
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void fill_uniform(Matrix& m, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = (2.0 * unit_uniform(rng) - 1.0) * bound;
  }
}

template <typename Fn>
void for_each_tensor(const NetworkParams& p, Fn&& fn) {
  fn("W_o", p.W_o.data(), p.W_o.size());
  fn("b_o", p.b_o.data(), p.b_o.size());
  fn("W_c", p.W_c.data(), p.W_c.size());
  for (std::size_t n = 0; n < p.W_hh.size(); ++n)
    fn("W_hh[" + std::to_string(n) + "]", p.W_hh[n].data(), p.W_hh[n].size());
  for (std::size_t n = 0; n < p.W_r.size(); ++n)
    fn("W_r[" + std::to_string(n) + "]", p.W_r[n].data(), p.W_r[n].size());
  for (std::size_t n = 0; n < p.b_r.size(); ++n)
    fn("b_r[" + std::to_string(n) + "]", p.b_r[n].data(), p.b_r[n].size());
}

template <typename Fn>
void for_each_tensor_mut(NetworkParams& p, Fn&& fn) {
  fn(p.W_o.data(), p.W_o.size());
  fn(p.b_o.data(), p.b_o.size());
  fn(p.W_c.data(), p.W_c.size());
  for (auto& m : p.W_hh) fn(m.data(), m.size());
  for (auto& m : p.W_r) fn(m.data(), m.size());
  for (auto& b : p.b_r) fn(b.data(), b.size());
}

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError("shape mismatch: " + what);
}

// Prior of layer n into `out`. tanh_context is tanh of the layer-above
// activity, or nullptr for the top layer.
void compute_prior(const NetworkParams& params, const ModelConfig& config,
                   const Vector& prev_q, const Vector& tanh_prev_q,
                   const Vector* tanh_context, const Vector& c, int n, Vector& out) {
  const double inv_tau = 1.0 / config.tau[n];
  out.noalias() = params.W_r[n] * tanh_prev_q;
  if (n == config.top()) {
    out.noalias() += params.W_c * c;
  } else {
    out.noalias() += params.W_hh[n] * (*tanh_context);
  }
  out += params.b_r[n];
  out = (1.0 - inv_tau) * prev_q + inv_tau * out;
}

// Bottom-up correction given priors and a sensory error.
void correct_layers(const NetworkParams& params, const ModelConfig& config,
                    std::span<const Vector> prior, std::span<const Vector> tanh_prior,
                    const Vector& sensory_error, std::span<Vector> drive,
                    std::span<Vector> posterior, std::span<Vector> error) {
  for (int n = 0; n < config.num_layers(); ++n) {
    if (n == 0) {
      drive[0].noalias() = params.W_o.transpose() * sensory_error;
    } else {
      drive[n].noalias() = params.W_hh[n - 1].transpose() * error[n - 1];
    }
    posterior[n] = prior[n].array() -
                   config.alpha_h[n] *
                       (1.0 - tanh_prior[n].array().square()) * drive[n].array();
    error[n] = prior[n] - posterior[n];
  }
}

}  // namespace

std::string_view to_string(TopdownSource source) {
  return source == TopdownSource::PriorT ? "prior_t" : "posterior_tminus1";
}

TopdownSource topdown_source_from_string(std::string_view name) {
  if (name == "prior_t") return TopdownSource::PriorT;
  if (name == "posterior_tminus1") return TopdownSource::PosteriorTMinus1;
  throw ArgumentError("unknown topdown_source '" + std::string(name) +
                      "' (expected prior_t or posterior_tminus1)");
}

void ModelConfig::validate() const {
  const auto n = nodes.size();
  if (n == 0) throw ArgumentError("model needs at least one layer");
  if (tau.size() != n || alpha_h.size() != n)
    throw ArgumentError("nodes, tau and alpha_h must have one entry per layer");
  if (loss_layer_weights.size() != n)
    throw ArgumentError("loss_layer_weights must have one entry per layer");
  for (std::size_t i = 0; i < n; ++i) {
    if (nodes[i] < 1) throw ArgumentError("every layer needs at least one node");
    if (!(tau[i] >= 1.0) || !std::isfinite(tau[i]))
      throw ArgumentError("tau must be finite and >= 1");
    if (!(alpha_h[i] >= 0.0) || !std::isfinite(alpha_h[i]))
      throw ArgumentError("alpha_h must be finite and >= 0");
    if (!(loss_layer_weights[i] >= 0.0) || !std::isfinite(loss_layer_weights[i]))
      throw ArgumentError("loss_layer_weights must be finite and >= 0");
  }
  if (num_classes < 1) throw ArgumentError("num_classes must be >= 1");
  if (output_dim < 1) throw ArgumentError("output_dim must be >= 1");
}

ModelConfig make_config(std::vector<int> nodes, std::vector<double> tau,
                        std::vector<double> alpha_h, int num_classes, int output_dim) {
  ModelConfig config;
  config.loss_layer_weights.assign(nodes.size(), 1.0);
  config.nodes = std::move(nodes);
  config.tau = std::move(tau);
  config.alpha_h = std::move(alpha_h);
  config.num_classes = num_classes;
  config.output_dim = output_dim;
  config.validate();
  return config;
}

std::span<const std::string_view> preset_names() { return kPresetNames; }

ModelConfig preset(std::string_view name, int num_classes, int output_dim) {
  for (const auto& row : preset_table()) {
    if (row.name == name) {
      return make_config(row.nodes, row.tau, row.alpha_h, num_classes, output_dim);
    }
  }
  std::ostringstream msg;
  msg << "unknown preset '" << name << "'; valid presets:";
  for (auto p : kPresetNames) msg << ' ' << p;
  throw ArgumentError(msg.str());
}

NetworkParams NetworkParams::zeros(const ModelConfig& config) {
  config.validate();
  const int N = config.num_layers();
  NetworkParams p;
  p.W_o = Matrix::Zero(config.output_dim, config.nodes[0]);
  p.b_o = Vector::Zero(config.output_dim);
  p.W_c = Matrix::Zero(config.nodes[N - 1], config.num_classes);
  for (int n = 0; n + 1 < N; ++n)
    p.W_hh.push_back(Matrix::Zero(config.nodes[n], config.nodes[n + 1]));
  for (int n = 0; n < N; ++n) {
    p.W_r.push_back(Matrix::Zero(config.nodes[n], config.nodes[n]));
    p.b_r.push_back(Vector::Zero(config.nodes[n]));
  }
  return p;
}

NetworkParams NetworkParams::random_init(const ModelConfig& config, std::uint64_t seed) {
  NetworkParams p = zeros(config);
  std::mt19937_64 rng(seed);
  fill_uniform(p.W_o, rng);
  fill_uniform(p.W_c, rng);
  for (auto& m : p.W_hh) fill_uniform(m, rng);
  for (auto& m : p.W_r) fill_uniform(m, rng);
  return p;
}

std::size_t NetworkParams::size() const {
  std::size_t total = 0;
  for_each_tensor(*this, [&](const std::string&, const double*, Eigen::Index len) {
    total += static_cast<std::size_t>(len);
  });
  return total;
}

Vector NetworkParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(size()));
  Eigen::Index offset = 0;
  for_each_tensor(*this, [&](const std::string&, const double* data, Eigen::Index len) {
    std::copy(data, data + len, flat.data() + offset);
    offset += len;
  });
  return flat;
}

void NetworkParams::unflatten(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != size())
    throw ArgumentError("flat parameter vector has " + std::to_string(flat.size()) +
                        " entries, expected " + std::to_string(size()));
  Eigen::Index offset = 0;
  for_each_tensor_mut(*this, [&](double* data, Eigen::Index len) {
    std::copy(flat.data() + offset, flat.data() + offset + len, data);
    offset += len;
  });
}

std::string NetworkParams::name_at(std::size_t index) const {
  std::string found;
  std::size_t offset = 0;
  for_each_tensor(*this, [&](const std::string& name, const double*, Eigen::Index len) {
    const auto n = static_cast<std::size_t>(len);
    if (found.empty() && index < offset + n) {
      found = name + "(" + std::to_string(index - offset) + ")";
    }
    offset += n;
  });
  if (found.empty()) throw ArgumentError("parameter index out of range");
  return found;
}

void NetworkParams::check_shapes(const ModelConfig& config) const {
  const int N = config.num_layers();
  const int D = config.output_dim;
  require_shape(W_o.rows() == D && W_o.cols() == config.nodes[0], "W_o");
  require_shape(b_o.size() == D, "b_o");
  require_shape(W_c.rows() == config.nodes[N - 1] && W_c.cols() == config.num_classes,
                "W_c");
  require_shape(static_cast<int>(W_hh.size()) == N - 1, "W_hh count");
  require_shape(static_cast<int>(W_r.size()) == N, "W_r count");
  require_shape(static_cast<int>(b_r.size()) == N, "b_r count");
  for (int n = 0; n < N; ++n) {
    require_shape(W_r[n].rows() == config.nodes[n] && W_r[n].cols() == config.nodes[n],
                  "W_r[" + std::to_string(n) + "]");
    require_shape(b_r[n].size() == config.nodes[n], "b_r[" + std::to_string(n) + "]");
    if (n + 1 < N) {
      require_shape(W_hh[n].rows() == config.nodes[n] &&
                        W_hh[n].cols() == config.nodes[n + 1],
                    "W_hh[" + std::to_string(n) + "]");
    }
  }
}

bool NetworkParams::all_finite() const {
  bool finite = true;
  for_each_tensor(*this, [&](const std::string&, const double* data, Eigen::Index len) {
    for (Eigen::Index i = 0; i < len && finite; ++i) finite = std::isfinite(data[i]);
  });
  return finite;
}

NetworkParams& NetworkParams::set_zero() {
  for_each_tensor_mut(*this, [](double* data, Eigen::Index len) {
    std::fill(data, data + len, 0.0);
  });
  return *this;
}

bool NetworkParams::operator==(const NetworkParams& other) const {
  if (W_hh.size() != other.W_hh.size() || W_r.size() != other.W_r.size() ||
      b_r.size() != other.b_r.size() || size() != other.size())
    return false;
  return flatten() == other.flatten();
}

std::size_t parameter_count(const ModelConfig& config) {
  return NetworkParams::zeros(config).size();
}

ClassEmbedding ClassEmbedding::zeros(int num_classes) {
  if (num_classes < 1) throw ArgumentError("class embedding needs at least one class");
  return ClassEmbedding{Vector::Zero(num_classes)};
}

ClassEmbedding one_hot(int k, int num_classes) {
  if (num_classes < 1) throw ArgumentError("class embedding needs at least one class");
  if (k < 0 || k >= num_classes)
    throw ArgumentError("class index " + std::to_string(k) + " out of range [0, " +
                        std::to_string(num_classes) + ")");
  ClassEmbedding c = ClassEmbedding::zeros(num_classes);
  c.values[k] = 1.0;
  return c;
}

std::vector<Vector> StepRecord::posteriors() const {
  std::vector<Vector> out;
  out.reserve(layers.size());
  for (const auto& layer : layers) out.push_back(layer.posterior);
  return out;
}

std::vector<Vector> initial_state(const ModelConfig& config) {
  std::vector<Vector> state;
  for (int width : config.nodes) state.push_back(Vector::Zero(width));
  return state;
}

Vector forward_prior(const NetworkParams& params, const ModelConfig& config,
                     std::span<const Vector> prev_posteriors,
                     std::span<const Vector> topdown_context, const ClassEmbedding& c,
                     int n) {
  if (n < 0 || n >= config.num_layers()) throw ArgumentError("layer index out of range");
  params.check_shapes(config);
  require_shape(static_cast<int>(prev_posteriors.size()) == config.num_layers() &&
                    prev_posteriors[n].size() == config.nodes[n],
                "prev_posteriors");
  require_shape(c.size() == config.num_classes, "class embedding");

  const Vector tanh_prev = prev_posteriors[n].array().tanh();
  Vector tanh_context;
  if (n < config.top()) {
    require_shape(static_cast<int>(topdown_context.size()) > n + 1 &&
                      topdown_context[n + 1].size() == config.nodes[n + 1],
                  "topdown_context");
    tanh_context = topdown_context[n + 1].array().tanh();
  }
  Vector out(config.nodes[n]);
  compute_prior(params, config, prev_posteriors[n], tanh_prev,
                n < config.top() ? &tanh_context : nullptr, c.values, n, out);
  if (!out.allFinite())
    throw NumericError("non-finite prior at layer " + std::to_string(n));
  return out;
}

Vector output_prediction(const NetworkParams& params, const Vector& h_prior_bottom) {
  require_shape(h_prior_bottom.size() == params.W_o.cols(), "h_prior_bottom");
  Vector x = params.W_o * h_prior_bottom.array().tanh().matrix();
  x += params.b_o;
  return x;
}

void posterior_update(const NetworkParams& params, const ModelConfig& config,
                      StepRecord& step) {
  const int N = config.num_layers();
  require_shape(static_cast<int>(step.layers.size()) == N, "step layers");
  if (!step.observation) {
    step.sensory_error.reset();
    for (auto& layer : step.layers) {
      layer.posterior = layer.prior;
      layer.error = Vector::Zero(layer.prior.size());
    }
    return;
  }
  require_shape(step.observation->size() == config.output_dim, "observation");
  step.sensory_error = step.prediction - *step.observation;

  std::vector<Vector> prior, tanh_prior, drive(N), posterior(N), error(N);
  for (const auto& layer : step.layers) {
    prior.push_back(layer.prior);
    tanh_prior.push_back(layer.prior.array().tanh());
  }
  correct_layers(params, config, prior, tanh_prior, *step.sensory_error, drive, posterior,
                 error);
  for (int n = 0; n < N; ++n) {
    if (!posterior[n].allFinite())
      throw NumericError("non-finite posterior at layer " + std::to_string(n));
    step.layers[n].posterior = std::move(posterior[n]);
    step.layers[n].error = std::move(error[n]);
  }
}

StepRecord rollout_step(const NetworkParams& params, const ModelConfig& config,
                        const ClassEmbedding& c, std::span<const Vector> prev_posteriors,
                        const std::optional<Vector>& observation, int t) {
  params.check_shapes(config);
  const int N = config.num_layers();
  require_shape(static_cast<int>(prev_posteriors.size()) == N, "prev_posteriors");
  for (int n = 0; n < N; ++n)
    require_shape(prev_posteriors[n].size() == config.nodes[n], "prev_posteriors");
  require_shape(c.size() == config.num_classes, "class embedding");
  if (observation) require_shape(observation->size() == config.output_dim, "observation");

  std::vector<Vector> prev_tanh;
  for (const auto& q : prev_posteriors) prev_tanh.push_back(q.array().tanh());

  StepBuffers buf;
  buf.resize(config);
  run_step(params, config, c.values, prev_posteriors, prev_tanh,
           observation ? observation->data() : nullptr, buf);

  StepRecord rec;
  rec.t = t;
  rec.layers.resize(N);
  for (int n = 0; n < N; ++n) {
    if (!buf.prior[n].allFinite() || !buf.posterior[n].allFinite())
      throw NumericError("non-finite hidden state at layer " + std::to_string(n) +
                         ", step " + std::to_string(t));
    rec.layers[n] = LayerState{buf.prior[n], buf.posterior[n], buf.error[n]};
  }
  if (!buf.prediction.allFinite())
    throw NumericError("non-finite prediction at step " + std::to_string(t));
  rec.prediction = buf.prediction;
  if (observation) {
    rec.observation = *observation;
    rec.sensory_error = buf.sensory_error;
  }
  return rec;
}

void StepBuffers::resize(const ModelConfig& config) {
  const auto N = static_cast<std::size_t>(config.num_layers());
  for (auto* v : {&prior, &tanh_prior, &posterior, &tanh_posterior, &error, &drive}) {
    v->resize(N);
    for (std::size_t n = 0; n < N; ++n) (*v)[n].resize(config.nodes[n]);
  }
  prediction.resize(config.output_dim);
  sensory_error.resize(config.output_dim);
}

void run_step(const NetworkParams& params, const ModelConfig& config, const Vector& c,
              std::span<const Vector> prev_posterior,
              std::span<const Vector> prev_tanh_posterior, const double* observation,
              StepBuffers& out) {
  const int top = config.top();
  for (int n = top; n >= 0; --n) {
    const Vector* context = nullptr;
    if (n < top) {
      context = config.topdown == TopdownSource::PriorT ? &out.tanh_prior[n + 1]
                                                        : &prev_tanh_posterior[n + 1];
    }
    compute_prior(params, config, prev_posterior[n], prev_tanh_posterior[n], context, c, n,
                  out.prior[n]);
    out.tanh_prior[n] = out.prior[n].array().tanh();
  }
  out.prediction.noalias() = params.W_o * out.tanh_prior[0];
  out.prediction += params.b_o;

  out.observed = observation != nullptr;
  if (out.observed) {
    out.sensory_error =
        out.prediction - Eigen::Map<const Vector>(observation, config.output_dim);
    correct_layers(params, config, out.prior, out.tanh_prior, out.sensory_error, out.drive,
                   out.posterior, out.error);
    for (int n = 0; n <= top; ++n) out.tanh_posterior[n] = out.posterior[n].array().tanh();
  } else {
    out.sensory_error.setZero();
    for (int n = 0; n <= top; ++n) {
      out.posterior[n] = out.prior[n];
      out.tanh_posterior[n] = out.tanh_prior[n];
      out.error[n].setZero();
      out.drive[n].setZero();
    }
  }
}

}  // namespace cernet
