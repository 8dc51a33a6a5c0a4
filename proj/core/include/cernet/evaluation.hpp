#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "cernet/model.hpp"

namespace cernet {

struct DtwResult {
  double score = 0.0;  // cost / path length
  double cost = 0.0;   // sum of Euclidean point distances along the path
  std::vector<std::pair<int, int>> path;
};

// Dynamic time warping over rows of a and b (points in R^D) with steps
// (1,0), (0,1), (1,1) and no window. Among minimum-cost paths the shortest
// is chosen, so score(a, b) == score(b, a).
DtwResult dtw(const Matrix& a, const Matrix& b);

struct TrialOutcome {
  int class_true = 0;
  int top1 = 0;
  int top2 = 0;
  double final_mse = 0.0;
};

struct RecognitionSummary {
  int n_trials = 0;
  double top1_accuracy = 0.0;
  double top2_accuracy = 0.0;
  std::vector<double> mse_top1;       // correct at Top-1
  std::vector<double> mse_top2;       // correct only at Top-2
  std::vector<double> mse_incorrect;  // neither
};

RecognitionSummary recognition_summary(std::span<const TrialOutcome> trials);

enum class Alternative { Less, Greater, TwoSided };
enum class PValueMethod { Auto, Exact, Normal };

std::string_view to_string(Alternative alternative);

struct UTestResult {
  double u = 0.0;  // U of sample a: #(a > b) + 0.5 #(a == b)
  double p_value = 1.0;
  Alternative alternative = Alternative::TwoSided;
  bool exact = false;
};

// Mann-Whitney U with midranks. Auto uses the exact null distribution when
// n_a + n_b <= 16 and there are no ties, otherwise the normal approximation
// with tie and continuity corrections. "Less" tests whether a tends to be
// smaller than b.
UTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                           Alternative alternative, PValueMethod method = PValueMethod::Auto);

double median(std::vector<double> values);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

}  // namespace cernet
