// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. `acceptance 3 5` runs a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cernet/checkpoint.hpp"
#include "cernet/dataset.hpp"
#include "cernet/evaluation.hpp"
#include "cernet/parallel.hpp"
#include "cernet/runtime.hpp"
#include "cernet/training.hpp"
#include "cli/cli.hpp"
#include "support/brute_force.hpp"
#include "support/finite_difference.hpp"
#include "support/fixtures.hpp"
#include "support/reference_dynamics.hpp"

namespace fs = std::filesystem;
using namespace cernet;
using namespace cernet::testing;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Verdict gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const int steps = 8;
  double worst_theta = 0, worst_c = 0;
  int models = 0;
  for (auto policy : {TopdownSource::PriorT, TopdownSource::PosteriorTMinus1}) {
    for (std::uint64_t seed : {0, 1, 2}) {
      const ModelConfig cfg = tiny_config(policy);
      const NetworkParams params = random_params(cfg, seed);
      const Matrix obs = random_observations(steps, cfg.output_dim, seed + 100);
      std::mt19937_64 rng(seed + 7);
      std::normal_distribution<double> n01(0.0, 0.5);
      ClassEmbedding c = ClassEmbedding::zeros(cfg.num_classes);
      for (auto& v : c.values) v = n01(rng);
      const std::vector<double> c_std(c.values.begin(), c.values.end());

      // dL/dtheta against finite differences of the reference loss.
      const auto analytic = bptt_gradients(params, cfg, obs, c);
      const auto numeric = central_difference(
          [&](const Vector& flat) {
            NetworkParams p = params;
            p.unflatten(flat);
            return reference_loss(p, cfg, c_std, obs);
          },
          params.flatten());
      worst_theta = std::max(worst_theta, compare_gradients(analytic.gradient, numeric).max_relative_error);

      // dL/dC as applied by one past-reconstruction update.
      InferenceConfig ic;
      ic.alpha_c = 1e-3;
      ic.n_iter = 1;
      const auto rec = past_reconstruction_update(Checkpoint{cfg, params}, c, obs, ic);
      const Vector grad_c = (c.values - rec.c.values) * (steps / ic.alpha_c);
      const auto numeric_c = central_difference(
          [&](const Vector& cv) {
            return reference_loss(params, cfg, std::vector<double>(cv.begin(), cv.end()), obs);
          },
          c.values);
      worst_c = std::max(worst_c, compare_gradients(grad_c, numeric_c).max_relative_error);
      ++models;
    }
  }
  const double secs = seconds_since(t0);
  return {worst_theta < 1e-4 && worst_c < 1e-4 && secs < 60.0,
          fmt("%d models, max rel err theta %.2e, C %.2e (tol 1e-4), %.1fs", models, worst_theta,
              worst_c, secs)};
}

// ---------------------------------------------------------------------------

Verdict dynamics_oracle() {
  double worst = 0;
  for (auto policy : {TopdownSource::PriorT, TopdownSource::PosteriorTMinus1}) {
    const ModelConfig cfg = tiny_config(policy);
    const NetworkParams params = random_params(cfg, 42);
    const Matrix obs = random_observations(3, cfg.output_dim, 43);
    const ClassEmbedding c = one_hot(1, cfg.num_classes);
    const auto ref = reference_rollout(params, cfg, {0.0, 1.0}, obs);
    std::vector<Vector> prev = initial_state(cfg);
    for (int t = 0; t < 3; ++t) {
      const StepRecord s = rollout_step(params, cfg, c, prev, Vector(obs.row(t).transpose()), t);
      for (int n = 0; n < cfg.num_layers(); ++n)
        for (int i = 0; i < cfg.nodes[n]; ++i) {
          worst = std::max(worst, std::abs(s.layers[n].prior[i] - ref[t].prior[n][i]));
          worst = std::max(worst, std::abs(s.layers[n].posterior[i] - ref[t].posterior[n][i]));
          worst = std::max(worst, std::abs(s.layers[n].error[i] - ref[t].error[n][i]));
        }
      for (int d = 0; d < cfg.output_dim; ++d) {
        worst = std::max(worst, std::abs(s.prediction[d] - ref[t].prediction[d]));
        worst = std::max(worst, std::abs((*s.sensory_error)[d] - ref[t].sensory_error[d]));
      }
      prev = s.posteriors();
    }
  }
  return {worst < 1e-12, fmt("max |delta| %.2e over 3 steps, both policies (tol 1e-12)", worst)};
}

// ---------------------------------------------------------------------------

Verdict hierarchy_advantage() {
  const auto t0 = std::chrono::steady_clock::now();
  data::SyntheticSpec spec;
  spec.num_classes = 5;
  spec.timesteps = 50;
  spec.hold_tail = 5;
  spec.seed = 1;
  const auto ds = data::generate_synthetic(spec);
  const ModelConfig single = make_config({66}, {10}, {1e-2}, 5, 3);
  const ModelConfig multi = make_config({56, 18, 8}, {10, 20, 40}, {1e-2, 5e-4, 5e-6}, 5, 3);
  const int seeds = 10;

  auto evaluate = [&](const ModelConfig& cfg, double& mean_loss, double& mean_dtw) {
    std::vector<double> loss(seeds), score(seeds);
    parallel_for(seeds, [&](std::size_t s) {
      TrainConfig tc;
      tc.epochs = 3000;
      tc.seed = s;
      const auto r = train(ds, cfg, tc);
      double d = 0;
      for (int k = 0; k < ds.num_classes(); ++k)
        d += dtw(generate_closed_loop(r.checkpoint, k, ds.timesteps(), PlantConfig{}).trajectory,
                 ds.classes[k].points)
                 .score;
      loss[s] = r.trace.best_loss();
      score[s] = d / ds.num_classes();
    });
    mean_loss = mean_std(loss).mean;
    mean_dtw = mean_std(score).mean;
  };
  double sl, sd, ml, md;
  evaluate(single, sl, sd);
  evaluate(multi, ml, md);
  return {ml < sl && md < sd,
          fmt("params single %zu / multi %zu; mean min loss %.4f vs %.4f; mean DTW %.4f vs %.4f "
              "(multi must be lower on both), %.0fs",
              parameter_count(single), parameter_count(multi), sl, ml, sd, md, seconds_since(t0))};
}

// ---------------------------------------------------------------------------
// Trained multi-layer fixture shared by criteria 4-6.

struct Fixture {
  data::TrajectoryDataset dataset;
  Checkpoint checkpoint;
  double train_seconds = 0;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    const auto t0 = std::chrono::steady_clock::now();
    data::SyntheticSpec spec;
    spec.num_classes = 5;
    spec.timesteps = 100;
    spec.seed = 1;
    Fixture out;
    out.dataset = data::generate_synthetic(spec);
    TrainConfig tc;
    tc.epochs = 10000;
    tc.seed = 0;
    out.checkpoint = train(out.dataset, preset("MultiMini", 5, 3), tc).checkpoint;
    out.train_seconds = seconds_since(t0);
    std::printf("  fixture: MultiMini on 5 synthetic classes, T=100, 10000 epochs (%.0fs)\n",
                out.train_seconds);
    return out;
  }();
  return f;
}

Verdict perturbation_recovery() {
  const auto& f = fixture();
  const int T = f.dataset.timesteps();
  const PerturbationSchedule perturb{40, 45, (Vector(3) << 0.2, 0.0, 0.0).finished()};
  double worst_ratio = 0, worst_spike = std::numeric_limits<double>::infinity();
  bool pass = true;
  std::string per_class;
  for (int k = 0; k < f.dataset.num_classes(); ++k) {
    const auto base = generate_closed_loop(f.checkpoint, k, T, PlantConfig{});
    const auto pert = generate_closed_loop(f.checkpoint, k, T, PlantConfig{}, perturb);
    const Matrix& target = f.dataset.classes[k].points;
    double d_base = 0, d_pert = 0;
    for (int t = 80; t < T; ++t) {
      d_base += (base.trajectory.row(t) - target.row(t)).norm();
      d_pert += (pert.trajectory.row(t) - target.row(t)).norm();
    }
    const double ratio = d_pert / d_base;
    std::vector<double> before;
    for (int t = 0; t < 40; ++t) before.push_back(pert.per_step[t].sensory_err_norm);
    double spike = 0;
    for (int t = 40; t <= 45; ++t) spike = std::max(spike, pert.per_step[t].sensory_err_norm);
    const double med = median(before);
    const bool ok = ratio < 2.0 && spike > 5.0 * med;
    pass = pass && ok;
    worst_ratio = std::max(worst_ratio, ratio);
    worst_spike = std::min(worst_spike, spike);
    per_class += fmt("  class %d: late distance %.4f vs baseline %.4f (ratio %.2f), spike %.3f vs "
                     "5 x median %.3g\n",
                     k, d_pert / (T - 80), d_base / (T - 80), ratio, spike, 5.0 * med);
  }
  std::fputs(per_class.c_str(), stdout);
  return {pass, fmt("ideal plant, offset (0.2,0,0) on steps 40-45; worst late-distance ratio %.2f "
                    "(< 2), smallest spike %.3f",
                    worst_ratio, worst_spike)};
}

// Criterion 5 trials, also consumed by criterion 6.
std::vector<TrialOutcome> recognition_trials(double noise) {
  const auto& f = fixture();
  const int K = f.dataset.num_classes(), trials = 10;
  std::vector<TrialOutcome> out(static_cast<std::size_t>(K * trials));
  parallel_for(out.size(), [&](std::size_t i) {
    const int k = static_cast<int>(i) / trials, s = static_cast<int>(i) % trials;
    const Matrix stream = self_stream(f.checkpoint, k, f.dataset.timesteps(), noise, 100 + s);
    InferenceConfig ic;  // alpha_c 0.025, n_iter 15, init_sigma 0.1
    ic.seed = static_cast<std::uint64_t>(s);
    const auto trace = infer_class(f.checkpoint, stream, ic);
    out[i] = {k, trace.top1(), trace.top2(), trace.final_mse};
  });
  return out;
}

const std::vector<TrialOutcome>& noisy_trials() {
  static const auto trials = recognition_trials(0.02);
  return trials;
}

Verdict self_recognition() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto clean = recognition_summary(recognition_trials(0.0));
  const auto noisy = recognition_summary(noisy_trials());
  return {clean.top1_accuracy >= 0.8 && noisy.top1_accuracy >= 0.5,
          fmt("Top-1 clean %.2f (>= 0.8), noisy sigma=0.02 %.2f (>= 0.5); Top-2 %.2f / %.2f; "
              "%d trials each, %.0fs",
              clean.top1_accuracy, noisy.top1_accuracy, clean.top2_accuracy, noisy.top2_accuracy,
              clean.n_trials, seconds_since(t0))};
}

Verdict confidence_separation() {
  const auto s = recognition_summary(noisy_trials());
  const std::size_t n1 = s.mse_top1.size(), n2 = s.mse_top2.size(), ni = s.mse_incorrect.size();
  std::string groups = fmt("groups top1=%zu top2=%zu incorrect=%zu", n1, n2, ni);
  if (n1 > 0 && n1 + n2 + ni > n1) {
    std::vector<double> rest = s.mse_incorrect;
    rest.insert(rest.end(), s.mse_top2.begin(), s.mse_top2.end());
    std::printf("  supplementary: median final L_past Top-1 correct %.3g, not Top-1 %.3g\n",
                median(s.mse_top1), median(rest));
  }
  if (n1 == 0 || ni == 0)
    return {false, groups + "; comparison not evaluable (a group is empty)"};
  const double m1 = median(s.mse_top1), mi = median(s.mse_incorrect);
  std::string detail = groups + fmt("; median Top-1 %.3g vs incorrect %.3g", m1, mi);
  bool pass = m1 < mi;
  if (ni >= 5) {
    const auto u = mann_whitney_u(s.mse_top1, s.mse_incorrect, Alternative::Less);
    detail += fmt("; Mann-Whitney U=%.1f p=%.3g (< 0.05)", u.u, u.p_value);
    pass = pass && u.p_value < 0.05;
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------

Verdict dtw_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 20), dim(1, 3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0;
  int pairs = 0, length_mismatch = 0;
  while (pairs < 200) {
    const int la = len(rng), lb = len(rng);
    if (la * lb > 20) continue;
    const int d = dim(rng);
    Matrix a(la, d), b(lb, d);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = u(rng);
    const auto dp = dtw(a, b);
    const auto bf = brute_force_dtw(a, b);
    worst = std::max(worst, std::abs(dp.cost - bf.cost));
    if (static_cast<int>(dp.path.size()) != bf.length) ++length_mismatch;
    ++pairs;
  }
  return {worst <= 1e-12 && length_mismatch == 0,
          fmt("%d pairs, max |cost delta| %.2e (tol 1e-12), path-length mismatches %d", pairs,
              worst, length_mismatch)};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return files;
}

// Every subcommand once, run from inside `dir` with relative paths so two
// sessions see identical arguments. Returns concatenated stdout, or "" and
// a message in `failure` if a command exits nonzero.
std::string cli_session(const fs::path& dir, std::string& failure) {
  const std::vector<std::vector<std::string>> commands = {
      {"gen-data", "--classes", "3", "--timesteps", "30", "--hold-tail", "3", "--seed", "4", "--out",
       "data.json"},
      {"train", "--data", "data.json", "--preset", "MultiMini", "--runs", "2", "--epochs", "40",
       "--seed", "9", "--out-dir", "train"},
      {"train", "--data", "data.json", "--preset", "SingleMini", "--epochs", "40", "--topdown",
       "posterior_tminus1", "--stop-gradient", "--out-dir", "train_single"},
      {"generate", "--checkpoint", "train/run_00/checkpoint.json", "--class", "1", "--steps", "30",
       "--perturb", "10:12:0.2,0,0", "--model-name", "mini", "--out", "gen/ideal.json"},
      {"generate", "--checkpoint", "train/run_00/checkpoint.json", "--class", "2", "--steps", "30",
       "--plant", "noisy", "--sigma", "0.05", "--plant-seed", "3", "--model-name", "mini", "--out",
       "gen/noisy.json"},
      {"generate", "--checkpoint", "train/run_00/checkpoint.json", "--class", "0", "--steps", "30",
       "--plant", "lagged", "--lambda", "0.5", "--model-name", "mini", "--out", "gen/lagged.json"},
      {"infer", "--checkpoint", "train/run_00/checkpoint.json", "--self-stream", "all", "--steps",
       "20", "--trials", "2", "--noise", "0.02", "--n-iter", "4", "--seed", "5", "--model-name",
       "mini", "--out-dir", "inf"},
      {"infer", "--checkpoint", "train/run_00/checkpoint.json", "--observation", "gen/ideal.json",
       "--steps", "20", "--n-iter", "3", "--model-name", "mini", "--out-dir", "inf_obs"},
      {"evaluate", "dtw", "--reports", "gen", "--data", "data.json", "--out", "dtw.csv"},
      {"evaluate", "dtw", "--a", "gen/ideal.json", "--b", "data.json", "--b-class", "1"},
      {"evaluate", "recognition", "--reports", "inf", "--out", "recognition.json"},
      {"evaluate", "confidence", "--reports", "inf", "--out", "confidence.csv"},
  };
  const fs::path cwd = fs::current_path();
  fs::current_path(dir);
  std::string transcript;
  for (const auto& args : commands) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) {
      failure = args[0] + " exited " + std::to_string(code) + ": " + err.str();
      break;
    }
    transcript += out.str();
  }
  fs::current_path(cwd);
  return transcript;
}

Verdict determinism_and_formats() {
  const fs::path root = fs::temp_directory_path() / "cernet_acceptance_c8";
  fs::remove_all(root);
  fs::create_directories(root / "a");
  fs::create_directories(root / "b");
  std::string fail_a, fail_b;
  const std::string out_a = cli_session(root / "a", fail_a);
  const std::string out_b = cli_session(root / "b", fail_b);
  if (!fail_a.empty() || !fail_b.empty()) {
    fs::remove_all(root);
    return {false, "CLI command failed: " + fail_a + fail_b};
  }
  const auto snap_a = snapshot(root / "a"), snap_b = snapshot(root / "b");
  int differing = 0;
  for (const auto& [name, content] : snap_a) {
    const auto it = snap_b.find(name);
    if (it == snap_b.end() || it->second != content) {
      std::printf("  differs: %s\n", name.c_str());
      ++differing;
    }
  }
  const bool cli_ok = snap_a.size() == snap_b.size() && differing == 0 && out_a == out_b;

  // Value-exact round trips.
  const auto ck = load_checkpoint(root / "a/train/run_00/checkpoint.json");
  const bool ck_ok = checkpoint_from_json(checkpoint_to_json(ck)) == ck &&
                     checkpoint_to_json(ck) == snap_a.at("train/run_00/checkpoint.json");
  Checkpoint random_ck{tiny_config(TopdownSource::PosteriorTMinus1), {}};
  random_ck.params = random_params(random_ck.config, 77);
  const bool ck_random_ok = checkpoint_from_json(checkpoint_to_json(random_ck)) == random_ck;
  const auto ds = data::load_dataset(root / "a/data.json");
  data::TrajectoryDataset raw;
  raw.classes.push_back({"noise", random_observations(17, 3, 5, 1e3)});
  const bool ds_ok = data::dataset_from_json(data::dataset_to_json(ds)) == ds &&
                     data::dataset_from_json(data::dataset_to_json(raw)) == raw;
  fs::remove_all(root);
  return {cli_ok && ck_ok && ck_random_ok && ds_ok,
          fmt("%zu output files + stdout compared across reruns, %d differ; checkpoint round trip "
              "%s; dataset round trip %s",
              snap_a.size(), differing, ck_ok && ck_random_ok ? "exact" : "NOT exact",
              ds_ok ? "exact" : "NOT exact")};
}

// ---------------------------------------------------------------------------

Verdict preset_fidelity() {
  struct Row {
    const char* name;
    std::vector<int> nodes;
    std::vector<double> tau, alpha;
    double params;
  };
  const std::vector<Row> table = {
      {"SingleMini", {50}, {10}, {1e-2}, 3.9e3},
      {"SingleStandard", {150}, {10}, {1e-2}, 22.9e3},
      {"SingleLarge", {300}, {10}, {1e-2}, 90.9e3},
      {"MultiMini", {50, 15, 7}, {10, 20, 40}, {1e-2, 5e-4, 5e-6}, 4.6e3},
      {"MultiStandard", {120, 40, 20}, {10, 20, 40}, {1e-2, 5e-4, 5e-6}, 22.9e3},
      {"MultiLarge", {250, 70, 20}, {10, 20, 40}, {1e-2, 5e-4, 5e-6}, 90.9e3},
  };
  bool shapes_ok = true, counts_ok = true;
  std::string detail;
  for (const auto& row : table) {
    const ModelConfig cfg = preset(row.name);  // K = 26, D = 3
    shapes_ok = shapes_ok && cfg.nodes == row.nodes && cfg.tau == row.tau && cfg.alpha_h == row.alpha;
    const double count = static_cast<double>(parameter_count(cfg));
    const double rel = count / row.params - 1.0;
    counts_ok = counts_ok && std::abs(rel) <= 0.02;
    std::printf("  %-14s params %6.0f vs %7.0f (%+.1f%%)\n", row.name, count, row.params, 100 * rel);
  }
  return {shapes_ok && counts_ok,
          fmt("nodes/tau/alpha %s; parameter counts %s", shapes_ok ? "exact" : "MISMATCH",
              counts_ok ? "within 2%" : "outside 2% for some presets (K=26, D=3)")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"dynamics oracle", dynamics_oracle},
      {"hierarchy advantage", hierarchy_advantage},
      {"perturbation recovery", perturbation_recovery},
      {"self-recognition", self_recognition},
      {"confidence separation", confidence_separation},
      {"DTW oracle", dtw_oracle},
      {"determinism and formats", determinism_and_formats},
      {"preset fidelity", preset_fidelity},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first,
                v.detail.c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
