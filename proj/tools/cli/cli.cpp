#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cernet/checkpoint.hpp"
#include "cernet/dataset.hpp"
#include "cernet/errors.hpp"
#include "cernet/evaluation.hpp"
#include "cernet/parallel.hpp"
#include "cernet/runtime.hpp"
#include "cernet/training.hpp"

namespace cernet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Shortest text that parses back to the same double.
std::string num(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string zero_pad(long value, int width) {
  std::string s = std::to_string(value);
  return s.size() >= static_cast<std::size_t>(width)
             ? s
             : std::string(static_cast<std::size_t>(width) - s.size(), '0') + s;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ArgumentError("'" + dir.string() + "' is not a directory");
    if (!fs::is_empty(dir) && !force)
      throw ArgumentError("output directory '" + dir.string() + "' is not empty (use --force)");
  } else {
    fs::create_directories(dir);
  }
}

void prepare_out_file(const fs::path& file, bool force) {
  if (fs::exists(file) && !force)
    throw ArgumentError("'" + file.string() + "' exists (use --force)");
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError("", "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// A trajectory from a dataset file (class index required when it holds
// more than one class) or from a report file.
Matrix load_trajectory(const fs::path& path, std::optional<int> class_index) {
  const json doc = parse_json_file(path);
  if (doc.contains("classes")) {
    const auto ds = data::load_dataset(path);
    int k = class_index.value_or(0);
    if (!class_index && ds.num_classes() != 1)
      throw ArgumentError("'" + path.string() + "' holds several classes; pick one with a class option");
    if (k < 0 || k >= ds.num_classes())
      throw ArgumentError("class " + std::to_string(k) + " not in '" + path.string() + "'");
    return ds.classes[static_cast<std::size_t>(k)].points;
  }
  return load_report(path).trajectory;
}

std::vector<RunReport> load_reports(const fs::path& dir, const std::string& mode) {
  if (!fs::is_directory(dir)) throw ArgumentError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<RunReport> reports;
  for (const auto& f : files) {
    RunReport r = load_report(f);
    if (r.mode == mode) reports.push_back(std::move(r));
  }
  if (reports.empty())
    throw ArgumentError("no " + mode + " reports in '" + dir.string() + "'");
  return reports;
}

PerturbationSchedule parse_perturbation(const std::string& text) {
  // start:end:dx,dy,...
  const auto c1 = text.find(':');
  const auto c2 = c1 == std::string::npos ? c1 : text.find(':', c1 + 1);
  if (c2 == std::string::npos) throw ArgumentError("--perturb expects start:end:dx,dy,...");
  PerturbationSchedule ps;
  std::vector<double> offset;
  try {
    std::size_t used = 0;
    ps.start_step = std::stoi(text.substr(0, c1), &used);
    if (used != c1) throw std::invalid_argument("start");
    const std::string end = text.substr(c1 + 1, c2 - c1 - 1);
    ps.end_step = std::stoi(end, &used);
    if (used != end.size()) throw std::invalid_argument("end");
    std::stringstream ss(text.substr(c2 + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      offset.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument("offset");
    }
  } catch (const std::logic_error&) {
    throw ArgumentError("cannot parse --perturb '" + text + "'");
  }
  if (offset.empty()) throw ArgumentError("--perturb needs an offset");
  ps.offset = Eigen::Map<const Vector>(offset.data(), static_cast<Eigen::Index>(offset.size()));
  return ps;
}

std::string csv_join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + num(v[i]);
  return s;
}

// ---- gen-data -------------------------------------------------------------

struct GenDataOptions {
  int classes = 5;
  int timesteps = 100;
  int dim = 3;
  int hold_tail = 10;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

int cmd_gen_data(const GenDataOptions& o, std::ostream& out) {
  data::SyntheticSpec spec;
  spec.num_classes = o.classes;
  spec.timesteps = o.timesteps;
  spec.dim = o.dim;
  spec.hold_tail = o.hold_tail;
  spec.seed = o.seed;
  const auto ds = data::generate_synthetic(spec);
  prepare_out_file(o.out, o.force);
  data::save_dataset(ds, o.out);
  out << "wrote " << o.out << ": K=" << ds.num_classes() << " T=" << ds.timesteps()
      << " D=" << ds.dim() << "\n";
  return kExitOk;
}

// ---- train ----------------------------------------------------------------

struct TrainOptions {
  std::string data;
  std::string preset;
  std::string config;
  int runs = 1;
  std::uint64_t seed = 0;
  int epochs = 10000;
  double lr = 1e-3;
  double grad_clip = 1.0;
  std::string topdown;
  bool stop_gradient = false;
  std::string out_dir;
  bool force = false;
};

ModelConfig config_from_file(const fs::path& path, int K, int D) {
  json doc = parse_json_file(path);
  if (!doc.is_object()) throw ParseError("", "model config must be a JSON object");
  if (!doc.contains("num_classes")) doc["num_classes"] = K;
  if (!doc.contains("output_dim")) doc["output_dim"] = D;
  return model_config_from_json(doc.dump());
}

int cmd_train(const TrainOptions& o, std::ostream& out) {
  const auto ds = data::load_dataset(o.data);
  ModelConfig cfg;
  std::string model_name;
  if (!o.preset.empty()) {
    cfg = preset(o.preset, ds.num_classes(), ds.dim());
    model_name = o.preset;
  } else {
    cfg = config_from_file(o.config, ds.num_classes(), ds.dim());
    model_name = fs::path(o.config).stem().string();
  }
  if (!o.topdown.empty()) cfg.topdown = topdown_source_from_string(o.topdown);
  if (cfg.num_classes != ds.num_classes() || cfg.output_dim != ds.dim())
    throw ArgumentError("model config does not match the dataset's class count or dimension");
  if (o.runs < 1) throw ArgumentError("--runs must be >= 1");

  TrainConfig base;
  base.epochs = o.epochs;
  base.learning_rate = o.lr;
  base.grad_clip = o.grad_clip;
  base.gradients.through_posterior = !o.stop_gradient;
  base.validate();
  prepare_out_dir(o.out_dir, o.force);

  std::vector<TrainResult> results(static_cast<std::size_t>(o.runs));
  parallel_for(results.size(), [&](std::size_t r) {
    TrainConfig tc = base;
    tc.seed = o.seed + r;
    results[r] = train(ds, cfg, tc);
    const fs::path run_dir = fs::path(o.out_dir) / ("run_" + zero_pad(static_cast<long>(r), 2));
    fs::create_directories(run_dir);
    save_checkpoint(results[r].checkpoint, run_dir / "checkpoint.json");
    write_text(run_dir / "trace.csv", results[r].trace.to_csv());
  });

  std::string summary = "model,run,seed,min_loss,best_epoch,epochs_run,diverged\n";
  std::vector<double> minima;
  bool any_diverged = false;
  for (std::size_t r = 0; r < results.size(); ++r) {
    const auto& res = results[r];
    const double best = res.trace.best_epoch >= 0 ? res.trace.best_loss() : 0.0;
    if (res.trace.best_epoch >= 0) minima.push_back(best);
    any_diverged |= res.diverged;
    summary += model_name + "," + std::to_string(r) + "," + std::to_string(o.seed + r) + "," +
               num(best) + "," + std::to_string(res.trace.best_epoch) + "," +
               std::to_string(res.trace.total_loss.size()) + "," + (res.diverged ? "1" : "0") +
               "\n";
  }
  write_text(fs::path(o.out_dir) / "summary.csv", summary);

  std::string table = "model,runs,mean_min_loss,std_min_loss\n";
  if (!minima.empty()) {
    const auto ms = mean_std(minima);
    table += model_name + "," + std::to_string(minima.size()) + "," + num(ms.mean) + "," +
             num(ms.std) + "\n";
  }
  write_text(fs::path(o.out_dir) / "summary_stats.csv", table);
  out << table;
  for (std::size_t r = 0; r < results.size(); ++r)
    if (results[r].diverged)
      out << "run " << r << " diverged: " << results[r].failure << "\n";
  return any_diverged ? kExitRuntime : kExitOk;
}

// ---- generate -------------------------------------------------------------

struct GenerateOptions {
  std::string checkpoint;
  int class_index = 0;
  int steps = 100;
  std::string plant = "ideal";
  double sigma = 0.0;
  double lambda = 1.0;
  std::uint64_t plant_seed = 0;
  std::string perturb;
  bool no_correction = false;
  std::string model_name;
  std::string out;
  bool force = false;
};

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
  Checkpoint ck = load_checkpoint(o.checkpoint);
  if (o.no_correction) std::fill(ck.config.alpha_h.begin(), ck.config.alpha_h.end(), 0.0);
  PlantConfig pc;
  pc.mode = plant_mode_from_string(o.plant);
  pc.sigma = o.sigma;
  pc.lambda = o.lambda;
  pc.seed = o.plant_seed;
  pc.validate();
  std::optional<PerturbationSchedule> ps;
  if (!o.perturb.empty()) ps = parse_perturbation(o.perturb);
  prepare_out_file(o.out, o.force);

  RunReport report = generate_closed_loop(ck, o.class_index, o.steps, pc, ps);
  report.trial_id = "generate-c" + std::to_string(o.class_index);
  report.model = o.model_name.empty() ? o.checkpoint : o.model_name;
  save_report(report, o.out);
  out << "wrote " << o.out << " (" << report.trajectory.rows() << " steps)\n";
  if (report.aborted) {
    out << "aborted: " << report.failure << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

// ---- infer ----------------------------------------------------------------

struct InferOptions {
  std::string checkpoint;
  std::string observation;
  std::string self_stream;
  int steps = 100;
  double noise = 0.0;
  int trials = 1;
  double alpha_c = 2.5e-2;
  int n_iter = 15;
  double init_sigma = 0.1;
  std::uint64_t seed = 0;
  bool prior_only = false;
  std::string model_name;
  std::string out_dir;
  bool force = false;
};

int cmd_infer(const InferOptions& o, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const int K = ck.config.num_classes;
  if (o.trials < 1) throw ArgumentError("--trials must be >= 1");
  if (!(o.noise >= 0.0)) throw ArgumentError("--noise must be >= 0");

  struct Stream {
    int class_true;
    std::optional<Matrix> fixed;  // observation file streams
  };
  std::vector<Stream> streams;
  if (!o.observation.empty()) {
    const json doc = parse_json_file(o.observation);
    if (doc.contains("classes")) {
      const auto ds = data::load_dataset(o.observation);
      for (int k = 0; k < ds.num_classes(); ++k)
        streams.push_back({k, ds.classes[static_cast<std::size_t>(k)].points});
    } else {
      const RunReport r = load_report(o.observation);
      streams.push_back({r.class_true, r.trajectory});
    }
    for (const auto& s : streams)
      if (s.fixed->cols() != ck.config.output_dim)
        throw ArgumentError("observation dimension " + std::to_string(s.fixed->cols()) +
                            " does not match model output_dim " +
                            std::to_string(ck.config.output_dim));
  } else if (o.self_stream == "all") {
    for (int k = 0; k < K; ++k) streams.push_back({k, std::nullopt});
  } else {
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(o.self_stream, &used);
      if (used != o.self_stream.size()) throw std::invalid_argument("class");
    } catch (const std::logic_error&) {
      throw ArgumentError("--self-stream expects a class index or 'all'");
    }
    if (k < 0 || k >= K)
      throw ArgumentError("class " + std::to_string(k) + " out of range for K=" + std::to_string(K));
    streams.push_back({k, std::nullopt});
  }

  InferenceConfig base;
  base.alpha_c = o.alpha_c;
  base.n_iter = o.n_iter;
  base.init_sigma = o.init_sigma;
  base.replay_with_posterior = !o.prior_only;
  base.validate();
  prepare_out_dir(o.out_dir, o.force);

  const std::size_t per_stream = static_cast<std::size_t>(o.trials);
  const std::size_t jobs = streams.size() * per_stream;
  std::vector<TrialOutcome> outcomes(jobs);
  parallel_for(jobs, [&](std::size_t j) {
    const Stream& s = streams[j / per_stream];
    const auto trial = static_cast<std::uint64_t>(j % per_stream);
    InferenceConfig ic = base;
    ic.seed = o.seed + trial;
    const Matrix obs = s.fixed ? *s.fixed
                               : self_stream(ck, s.class_true, o.steps, o.noise,
                                             mix_seed(ic.seed, static_cast<std::uint64_t>(s.class_true)));
    const InferenceTrace tr = infer_class(ck, obs, ic);

    RunReport r;
    r.trial_id = "infer-c" + std::to_string(s.class_true) + "-t" + std::to_string(trial);
    r.mode = "infer";
    r.model = o.model_name.empty() ? o.checkpoint : o.model_name;
    r.class_true = s.class_true;
    r.class_top1 = tr.top1();
    r.class_top2 = tr.top2();
    r.final_mse = tr.final_mse;
    r.trajectory = obs;
    r.predictions = tr.predictions;
    r.per_step = tr.per_step;
    r.c_history = tr.c_history;
    r.mse_history = tr.mse_history;
    r.ranking = tr.ranking;
    save_report(r, fs::path(o.out_dir) / ("trial_c" + zero_pad(s.class_true, 2) + "_t" +
                                          zero_pad(static_cast<long>(trial), 3) + ".json"));
    outcomes[j] = TrialOutcome{s.class_true, tr.top1(), tr.top2(), tr.final_mse};
  });

  const auto summary = recognition_summary(outcomes);
  out << "trials=" << summary.n_trials << " top1=" << num(summary.top1_accuracy)
      << " top2=" << num(summary.top2_accuracy) << "\n";
  return kExitOk;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateOptions {
  std::string a, b;
  std::optional<int> a_class, b_class;
  std::string reports;
  std::string data;
  std::string out;
  bool force = false;
};

void emit(const EvaluateOptions& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  prepare_out_file(o.out, o.force);
  write_text(o.out, text);
}

int cmd_evaluate_dtw(const EvaluateOptions& o, std::ostream& out) {
  if (!o.reports.empty()) {
    if (o.data.empty()) throw ArgumentError("--reports needs --data with the target trajectories");
    const auto ds = data::load_dataset(o.data);
    std::map<std::string, std::vector<double>> by_model;
    for (const auto& r : load_reports(o.reports, "generate")) {
      if (r.class_true < 0 || r.class_true >= ds.num_classes())
        throw ArgumentError("report " + r.trial_id + " has class outside the dataset");
      by_model[r.model].push_back(
          dtw(r.trajectory, ds.classes[static_cast<std::size_t>(r.class_true)].points).score);
    }
    std::string text = "model,n,dtw_mean,dtw_std\n";
    for (const auto& [model, scores] : by_model) {
      const auto ms = mean_std(scores);
      text += model + "," + std::to_string(scores.size()) + "," + num(ms.mean) + "," +
              num(ms.std) + "\n";
    }
    emit(o, text, out);
    return kExitOk;
  }
  if (o.a.empty() || o.b.empty()) throw ArgumentError("dtw needs --a and --b, or --reports");
  const auto r = dtw(load_trajectory(o.a, o.a_class), load_trajectory(o.b, o.b_class));
  emit(o, num(r.score) + "\n", out);
  return kExitOk;
}

RecognitionSummary summary_from_reports(const std::string& dir) {
  std::vector<TrialOutcome> outcomes;
  for (const auto& r : load_reports(dir, "infer")) {
    if (!r.class_top1 || !r.class_top2 || !r.final_mse)
      throw ParseError("class_top1", "inference report " + r.trial_id + " lacks its outcome");
    outcomes.push_back({r.class_true, *r.class_top1, *r.class_top2, *r.final_mse});
  }
  return recognition_summary(outcomes);
}

int cmd_evaluate_recognition(const EvaluateOptions& o, std::ostream& out) {
  if (o.reports.empty()) throw ArgumentError("recognition needs --reports");
  const auto s = summary_from_reports(o.reports);
  json doc{{"n_trials", s.n_trials},
           {"top1_accuracy", s.top1_accuracy},
           {"top2_accuracy", s.top2_accuracy},
           {"mse_top1", s.mse_top1},
           {"mse_top2", s.mse_top2},
           {"mse_incorrect", s.mse_incorrect}};
  emit(o, doc.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_evaluate_confidence(const EvaluateOptions& o, std::ostream& out) {
  if (o.reports.empty()) throw ArgumentError("confidence needs --reports");
  const auto s = summary_from_reports(o.reports);
  const std::pair<std::string, const std::vector<double>*> groups[] = {
      {"top1", &s.mse_top1}, {"top2", &s.mse_top2}, {"incorrect", &s.mse_incorrect}};
  std::string text = "group_a,group_b,n_a,n_b,median_a,median_b,u,p_value,method\n";
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const auto& [na, a] = groups[i];
      const auto& [nb, b] = groups[j];
      text += na + "," + nb + "," + std::to_string(a->size()) + "," + std::to_string(b->size()) + ",";
      text += (a->empty() ? "NA" : num(median(*a))) + "," + (b->empty() ? "NA" : num(median(*b))) + ",";
      if (a->empty() || b->empty()) {
        text += "NA,NA,NA\n";
        continue;
      }
      // One-sided: is the better-recognized group's error lower?
      const auto u = mann_whitney_u(*a, *b, Alternative::Less);
      text += num(u.u) + "," + num(u.p_value) + "," + (u.exact ? "exact" : "normal") + "\n";
    }
  }
  text += "# mse_top1=" + csv_join(s.mse_top1) + "\n";
  text += "# mse_top2=" + csv_join(s.mse_top2) + "\n";
  text += "# mse_incorrect=" + csv_join(s.mse_incorrect) + "\n";
  emit(o, text, out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Class-embedding predictive-coding RNN: data, training, generation, inference"};
  app.name("cernet");
  app.require_subcommand(1);
  std::function<int()> action;

  GenDataOptions gen;
  auto* gd = app.add_subcommand("gen-data", "Write a synthetic trajectory dataset");
  gd->add_option("--classes", gen.classes, "Number of classes")->capture_default_str();
  gd->add_option("--timesteps", gen.timesteps, "Steps per trajectory")->capture_default_str();
  gd->add_option("--dim", gen.dim, "Point dimension")->capture_default_str();
  gd->add_option("--hold-tail", gen.hold_tail, "Trailing steps holding the last point")->capture_default_str();
  gd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gd->add_option("--out", gen.out, "Output dataset file")->required();
  gd->add_flag("--force", gen.force, "Overwrite an existing file");
  gd->callback([&] { action = [&] { return cmd_gen_data(gen, out); }; });

  TrainOptions tr;
  auto* tc = app.add_subcommand("train", "Train one model per seed on a dataset");
  tc->add_option("--data", tr.data, "Dataset file")->required();
  auto* preset_opt = tc->add_option("--preset", tr.preset, "Model preset name");
  auto* config_opt = tc->add_option("--config", tr.config, "Model config JSON file");
  preset_opt->excludes(config_opt);
  tc->add_option("--runs", tr.runs, "Number of seeds")->capture_default_str();
  tc->add_option("--seed", tr.seed, "First seed; run r uses seed + r")->capture_default_str();
  tc->add_option("--epochs", tr.epochs, "Training epochs")->capture_default_str();
  tc->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  tc->add_option("--grad-clip", tr.grad_clip, "Global gradient norm limit")->capture_default_str();
  tc->add_option("--topdown", tr.topdown, "prior_t or posterior_tminus1");
  tc->add_flag("--stop-gradient", tr.stop_gradient, "Do not backpropagate through posterior corrections");
  tc->add_option("--out-dir", tr.out_dir, "Output directory")->required();
  tc->add_flag("--force", tr.force, "Allow a non-empty output directory");
  tc->callback([&] {
    if (tr.preset.empty() && tr.config.empty()) throw CLI::RequiredError("--preset or --config");
    action = [&] { return cmd_train(tr, out); };
  });

  GenerateOptions ge;
  auto* gc = app.add_subcommand("generate", "Closed-loop generation for one class");
  gc->add_option("--checkpoint", ge.checkpoint, "Checkpoint file")->required();
  gc->add_option("--class", ge.class_index, "Class index")->required();
  gc->add_option("--steps", ge.steps, "Steps to generate")->capture_default_str();
  gc->add_option("--plant", ge.plant, "ideal, noisy or lagged")->capture_default_str();
  gc->add_option("--sigma", ge.sigma, "Noisy plant std")->capture_default_str();
  gc->add_option("--lambda", ge.lambda, "Lagged plant coefficient")->capture_default_str();
  gc->add_option("--plant-seed", ge.plant_seed, "Noisy plant seed")->capture_default_str();
  gc->add_option("--perturb", ge.perturb, "start:end:dx,dy,... observation offset");
  gc->add_flag("--no-correction", ge.no_correction, "Set every alpha_h to zero");
  gc->add_option("--model-name", ge.model_name, "Model label stored in the report");
  gc->add_option("--out", ge.out, "Output report file")->required();
  gc->add_flag("--force", ge.force, "Overwrite an existing file");
  gc->callback([&] { action = [&] { return cmd_generate(ge, out); }; });

  InferOptions in;
  auto* ic = app.add_subcommand("infer", "Online class inference trials");
  ic->add_option("--checkpoint", in.checkpoint, "Checkpoint file")->required();
  auto* obs_opt = ic->add_option("--observation", in.observation, "Dataset or report file to observe");
  auto* self_opt = ic->add_option("--self-stream", in.self_stream, "Class index or 'all': observe the model's own output");
  obs_opt->excludes(self_opt);
  ic->add_option("--steps", in.steps, "Self-stream length")->capture_default_str();
  ic->add_option("--noise", in.noise, "Observation noise std for self-streams")->capture_default_str();
  ic->add_option("--trials", in.trials, "Trials per stream; trial i uses seed + i")->capture_default_str();
  ic->add_option("--alpha-c", in.alpha_c, "Class-embedding step size")->capture_default_str();
  ic->add_option("--n-iter", in.n_iter, "Reconstruction iterations per step")->capture_default_str();
  ic->add_option("--init-sigma", in.init_sigma, "Std of the initial embedding")->capture_default_str();
  ic->add_option("--seed", in.seed, "First trial seed")->capture_default_str();
  ic->add_flag("--prior-only-replay", in.prior_only, "Replay without posterior corrections");
  ic->add_option("--model-name", in.model_name, "Model label stored in reports");
  ic->add_option("--out-dir", in.out_dir, "Output directory")->required();
  ic->add_flag("--force", in.force, "Allow a non-empty output directory");
  ic->callback([&] {
    if (in.observation.empty() && in.self_stream.empty())
      throw CLI::RequiredError("--observation or --self-stream");
    action = [&] { return cmd_infer(in, out); };
  });

  EvaluateOptions ev;
  auto* ec = app.add_subcommand("evaluate", "Score generation and inference reports");
  ec->require_subcommand(1);
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", ev.out, "Write to a file instead of stdout");
    sub->add_flag("--force", ev.force, "Overwrite an existing file");
  };
  auto* edtw = ec->add_subcommand("dtw", "DTW score of two trajectories, or per-model table");
  edtw->add_option("--a", ev.a, "Dataset or report file");
  edtw->add_option("--b", ev.b, "Dataset or report file");
  edtw->add_option("--a-class", ev.a_class, "Class index when --a is a dataset");
  edtw->add_option("--b-class", ev.b_class, "Class index when --b is a dataset");
  edtw->add_option("--reports", ev.reports, "Directory of generation reports");
  edtw->add_option("--data", ev.data, "Dataset with the target trajectories");
  add_out(edtw);
  edtw->callback([&] { action = [&] { return cmd_evaluate_dtw(ev, out); }; });
  auto* erec = ec->add_subcommand("recognition", "Top-1/Top-2 accuracy and group errors");
  erec->add_option("--reports", ev.reports, "Directory of inference reports")->required();
  add_out(erec);
  erec->callback([&] { action = [&] { return cmd_evaluate_recognition(ev, out); }; });
  auto* econ = ec->add_subcommand("confidence", "Pairwise Mann-Whitney tests on final errors");
  econ->add_option("--reports", ev.reports, "Directory of inference reports")->required();
  add_out(econ);
  econ->callback([&] { action = [&] { return cmd_evaluate_confidence(ev, out); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* sub = nullptr;
    for (auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return kExitUsage;
  }

  try {
    return action();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace cernet::cli
