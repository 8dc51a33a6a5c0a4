#include "cernet/checkpoint.hpp"

#include "json_util.hpp"

namespace cernet {

namespace {

using detail::json;

json config_to_json(const ModelConfig& c) {
  return json{{"nodes", c.nodes},
              {"tau", c.tau},
              {"alpha_h", c.alpha_h},
              {"num_classes", c.num_classes},
              {"output_dim", c.output_dim},
              {"loss_layer_weights", c.loss_layer_weights},
              {"topdown_source", std::string(to_string(c.topdown))}};
}

template <typename T>
std::vector<T> list_from(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if constexpr (std::is_same_v<T, int>) {
      out.push_back(detail::integer(j[i], p));
    } else {
      out.push_back(detail::number(j[i], p));
    }
  }
  return out;
}

ModelConfig config_from_json(const json& j) {
  const std::string base = "config";
  ModelConfig c;
  c.nodes = list_from<int>(detail::field(j, "nodes", base), base + ".nodes");
  c.tau = list_from<double>(detail::field(j, "tau", base), base + ".tau");
  c.alpha_h = list_from<double>(detail::field(j, "alpha_h", base), base + ".alpha_h");
  c.num_classes = detail::integer(detail::field(j, "num_classes", base), base + ".num_classes");
  c.output_dim = detail::integer(detail::field(j, "output_dim", base), base + ".output_dim");
  if (j.contains("loss_layer_weights")) {
    c.loss_layer_weights =
        list_from<double>(j["loss_layer_weights"], base + ".loss_layer_weights");
  } else {
    c.loss_layer_weights.assign(c.nodes.size(), 1.0);
  }
  if (j.contains("topdown_source")) {
    const auto& td = j["topdown_source"];
    if (!td.is_string()) throw ParseError(base + ".topdown_source", "expected a string");
    try {
      c.topdown = topdown_source_from_string(td.get<std::string>());
    } catch (const ArgumentError& e) {
      throw ParseError(base + ".topdown_source", e.what());
    }
  }
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw ParseError(base, e.what());
  }
  return c;
}

json params_to_json(const NetworkParams& p) {
  json W_hh = json::array(), W_r = json::array(), b_r = json::array();
  for (const auto& m : p.W_hh) W_hh.push_back(detail::to_json(m));
  for (const auto& m : p.W_r) W_r.push_back(detail::to_json(m));
  for (const auto& b : p.b_r) b_r.push_back(detail::to_json(b));
  return json{{"W_o", detail::to_json(p.W_o)}, {"b_o", detail::to_json(p.b_o)},
              {"W_c", detail::to_json(p.W_c)}, {"W_hh", W_hh},
              {"W_r", W_r},                    {"b_r", b_r}};
}

NetworkParams params_from_json(const json& j, const ModelConfig& c) {
  const std::string base = "params";
  const int N = c.num_layers();
  NetworkParams p;
  p.W_o = detail::matrix_from(detail::field(j, "W_o", base), base + ".W_o", c.output_dim,
                              c.nodes[0]);
  p.b_o = detail::vector_from(detail::field(j, "b_o", base), base + ".b_o", c.output_dim);
  p.W_c = detail::matrix_from(detail::field(j, "W_c", base), base + ".W_c", c.nodes[N - 1],
                              c.num_classes);
  const auto& W_hh = detail::field(j, "W_hh", base);
  const auto& W_r = detail::field(j, "W_r", base);
  const auto& b_r = detail::field(j, "b_r", base);
  if (!W_hh.is_array() || static_cast<int>(W_hh.size()) != N - 1)
    throw ParseError(base + ".W_hh", "expected " + std::to_string(N - 1) + " matrices");
  if (!W_r.is_array() || static_cast<int>(W_r.size()) != N)
    throw ParseError(base + ".W_r", "expected " + std::to_string(N) + " matrices");
  if (!b_r.is_array() || static_cast<int>(b_r.size()) != N)
    throw ParseError(base + ".b_r", "expected " + std::to_string(N) + " vectors");
  for (int n = 0; n < N; ++n) {
    const auto idx = static_cast<std::size_t>(n);
    const std::string s = "[" + std::to_string(n) + "]";
    if (n + 1 < N)
      p.W_hh.push_back(detail::matrix_from(W_hh[idx], base + ".W_hh" + s, c.nodes[n],
                                           c.nodes[n + 1]));
    p.W_r.push_back(
        detail::matrix_from(W_r[idx], base + ".W_r" + s, c.nodes[n], c.nodes[n]));
    p.b_r.push_back(detail::vector_from(b_r[idx], base + ".b_r" + s, c.nodes[n]));
  }
  return p;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  checkpoint.params.check_shapes(checkpoint.config);
  json doc{{"format_version", kCheckpointFormatVersion},
           {"config", config_to_json(checkpoint.config)},
           {"params", params_to_json(checkpoint.params)}};
  return doc.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const json doc = detail::parse_text(text, "checkpoint");
  const int version =
      detail::integer(detail::field(doc, "format_version", ""), "format_version");
  if (version != kCheckpointFormatVersion)
    throw ParseError("format_version", "unsupported version " + std::to_string(version));
  Checkpoint cp;
  cp.config = config_from_json(detail::field(doc, "config", ""));
  cp.params = params_from_json(detail::field(doc, "params", ""), cp.config);
  return cp;
}

std::string model_config_to_json(const ModelConfig& config) {
  config.validate();
  return config_to_json(config).dump() + "\n";
}

ModelConfig model_config_from_json(const std::string& text) {
  return config_from_json(detail::parse_text(text, "config"));
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  detail::write_file(path, checkpoint_to_json(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(detail::read_file(path));
}

}  // namespace cernet
