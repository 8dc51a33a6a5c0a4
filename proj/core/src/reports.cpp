#include "cernet/runtime.hpp"

#include "json_util.hpp"

namespace cernet {

namespace {

using detail::json;

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<int> optional_int(const json& obj, const std::string& key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return detail::integer(obj[key], key);
}

}  // namespace

std::string report_to_json(const RunReport& r) {
  json per_step = json::array();
  for (const auto& s : r.per_step) {
    per_step.push_back(json{{"t", s.t},
                            {"sensory_err_norm", s.sensory_err_norm},
                            {"layer_err_norms", s.layer_err_norms}});
  }
  json c_history = json::array();
  for (const auto& c : r.c_history) c_history.push_back(detail::to_json(c));

  json doc{{"trial_id", r.trial_id},
           {"mode", r.mode},
           {"model", r.model},
           {"class_true", r.class_true},
           {"class_top1", optional_json(r.class_top1)},
           {"class_top2", optional_json(r.class_top2)},
           {"final_mse", optional_json(r.final_mse)},
           {"trajectory", detail::to_json(r.trajectory)},
           {"predictions", detail::to_json(r.predictions)},
           {"per_step", per_step},
           {"c_history", c_history},
           {"mse_history", r.mse_history},
           {"ranking", r.ranking},
           {"aborted", r.aborted},
           {"failure", r.failure}};
  return doc.dump() + "\n";
}

RunReport report_from_json(const std::string& text) {
  const json doc = detail::parse_text(text, "report");
  RunReport r;
  const auto& trial = detail::field(doc, "trial_id", "");
  if (!trial.is_string()) throw ParseError("trial_id", "expected a string");
  r.trial_id = trial.get<std::string>();
  if (doc.contains("mode") && doc["mode"].is_string()) r.mode = doc["mode"].get<std::string>();
  if (doc.contains("model") && doc["model"].is_string()) r.model = doc["model"].get<std::string>();
  r.class_true = detail::integer(detail::field(doc, "class_true", ""), "class_true");
  r.class_top1 = optional_int(doc, "class_top1");
  r.class_top2 = optional_int(doc, "class_top2");
  if (doc.contains("final_mse") && !doc["final_mse"].is_null())
    r.final_mse = detail::number(doc["final_mse"], "final_mse");

  r.trajectory = detail::matrix_from(detail::field(doc, "trajectory", ""), "trajectory");
  if (doc.contains("predictions"))
    r.predictions = detail::matrix_from(doc["predictions"], "predictions");

  const json& per_step = detail::field(doc, "per_step", "");
  if (!per_step.is_array()) throw ParseError("per_step", "expected an array");
  for (std::size_t i = 0; i < per_step.size(); ++i) {
    const std::string base = "per_step[" + std::to_string(i) + "]";
    StepSummary s;
    s.t = detail::integer(detail::field(per_step[i], "t", base), base + ".t");
    s.sensory_err_norm = detail::number(detail::field(per_step[i], "sensory_err_norm", base),
                                        base + ".sensory_err_norm");
    const Vector norms = detail::vector_from(
        detail::field(per_step[i], "layer_err_norms", base), base + ".layer_err_norms");
    s.layer_err_norms.assign(norms.data(), norms.data() + norms.size());
    r.per_step.push_back(std::move(s));
  }

  const json& c_history = detail::field(doc, "c_history", "");
  if (!c_history.is_array()) throw ParseError("c_history", "expected an array");
  for (std::size_t i = 0; i < c_history.size(); ++i)
    r.c_history.push_back(
        detail::vector_from(c_history[i], "c_history[" + std::to_string(i) + "]"));

  if (doc.contains("mse_history")) {
    const Vector m = detail::vector_from(doc["mse_history"], "mse_history");
    r.mse_history.assign(m.data(), m.data() + m.size());
  }
  if (doc.contains("ranking")) {
    const json& ranking = doc["ranking"];
    if (!ranking.is_array()) throw ParseError("ranking", "expected an array");
    for (std::size_t i = 0; i < ranking.size(); ++i)
      r.ranking.push_back(detail::integer(ranking[i], "ranking[" + std::to_string(i) + "]"));
  }
  if (doc.contains("aborted") && doc["aborted"].is_boolean()) r.aborted = doc["aborted"].get<bool>();
  if (doc.contains("failure") && doc["failure"].is_string())
    r.failure = doc["failure"].get<std::string>();
  return r;
}

void save_report(const RunReport& report, const std::filesystem::path& path) {
  detail::write_file(path, report_to_json(report));
}

RunReport load_report(const std::filesystem::path& path) {
  return report_from_json(detail::read_file(path));
}

}  // namespace cernet
