#include "cernet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cernet/errors.hpp"

namespace cernet {

DtwResult dtw(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0 || b.rows() == 0) throw ArgumentError("dtw needs non-empty sequences");
  if (a.cols() != b.cols())
    throw ArgumentError("dtw sequences differ in dimension (" + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.cols()) + ")");
  const auto n = static_cast<std::size_t>(a.rows());
  const auto m = static_cast<std::size_t>(b.rows());

  // cost[i][j], len[i][j]: best (cost, length) of a path from (0,0) to (i,j).
  std::vector<double> cost(n * m);
  std::vector<int> len(n * m);
  std::vector<unsigned char> from(n * m);  // 0 diag, 1 up (i-1), 2 left (j-1)
  auto at = [m](std::size_t i, std::size_t j) { return i * m + j; };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = (a.row(static_cast<Eigen::Index>(i)) - b.row(static_cast<Eigen::Index>(j))).norm();
      if (i == 0 && j == 0) {
        cost[0] = d;
        len[0] = 1;
        from[0] = 0;
        continue;
      }
      double best_cost = std::numeric_limits<double>::infinity();
      int best_len = std::numeric_limits<int>::max();
      unsigned char best_from = 0;
      auto consider = [&](std::size_t pi, std::size_t pj, unsigned char tag) {
        const double c = cost[at(pi, pj)];
        const int l = len[at(pi, pj)];
        if (c < best_cost || (c == best_cost && l < best_len)) {
          best_cost = c;
          best_len = l;
          best_from = tag;
        }
      };
      if (i > 0 && j > 0) consider(i - 1, j - 1, 0);
      if (i > 0) consider(i - 1, j, 1);
      if (j > 0) consider(i, j - 1, 2);
      cost[at(i, j)] = best_cost + d;
      len[at(i, j)] = best_len + 1;
      from[at(i, j)] = best_from;
    }
  }

  DtwResult result;
  result.cost = cost[at(n - 1, m - 1)];
  std::size_t i = n - 1, j = m - 1;
  result.path.emplace_back(static_cast<int>(i), static_cast<int>(j));
  while (i > 0 || j > 0) {
    switch (from[at(i, j)]) {
      case 0: --i; --j; break;
      case 1: --i; break;
      default: --j; break;
    }
    result.path.emplace_back(static_cast<int>(i), static_cast<int>(j));
  }
  std::reverse(result.path.begin(), result.path.end());
  result.score = result.cost / static_cast<double>(result.path.size());
  return result;
}

RecognitionSummary recognition_summary(std::span<const TrialOutcome> trials) {
  RecognitionSummary s;
  s.n_trials = static_cast<int>(trials.size());
  for (const auto& t : trials) {
    if (t.top1 == t.class_true) {
      s.mse_top1.push_back(t.final_mse);
    } else if (t.top2 == t.class_true) {
      s.mse_top2.push_back(t.final_mse);
    } else {
      s.mse_incorrect.push_back(t.final_mse);
    }
  }
  if (s.n_trials > 0) {
    const double n = static_cast<double>(s.n_trials);
    s.top1_accuracy = static_cast<double>(s.mse_top1.size()) / n;
    s.top2_accuracy = static_cast<double>(s.mse_top1.size() + s.mse_top2.size()) / n;
  }
  return s;
}

std::string_view to_string(Alternative alternative) {
  switch (alternative) {
    case Alternative::Less: return "less";
    case Alternative::Greater: return "greater";
    case Alternative::TwoSided: return "two_sided";
  }
  return "two_sided";
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// counts[u] = number of orderings of na a's and nb b's with U_a == u.
std::vector<double> exact_u_counts(int na, int nb) {
  // f[i][j] is the distribution for i a's and j b's; built row by row.
  std::vector<std::vector<std::vector<double>>> f(
      static_cast<std::size_t>(na + 1), std::vector<std::vector<double>>(static_cast<std::size_t>(nb + 1)));
  for (int i = 0; i <= na; ++i) {
    for (int j = 0; j <= nb; ++j) {
      auto& cur = f[i][j];
      cur.assign(static_cast<std::size_t>(i * j + 1), 0.0);
      if (i == 0 || j == 0) {
        cur[0] = 1.0;
        continue;
      }
      // Largest element is an a (beats all j b's) or a b (adds nothing).
      const auto& with_a = f[i - 1][j];
      const auto& with_b = f[i][j - 1];
      for (std::size_t u = 0; u < with_a.size(); ++u) cur[u + static_cast<std::size_t>(j)] += with_a[u];
      for (std::size_t u = 0; u < with_b.size(); ++u) cur[u] += with_b[u];
    }
  }
  return f[na][nb];
}

}  // namespace

UTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                           Alternative alternative, PValueMethod method) {
  if (a.empty() || b.empty()) throw ArgumentError("mann_whitney_u needs non-empty samples");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;

  // Midranks over the pooled sample.
  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(n);
  for (double x : a) pooled.emplace_back(x, 0);
  for (double x : b) pooled.emplace_back(x, 1);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  bool has_ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
    const double t = static_cast<double>(j - i + 1);
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (pooled[k].second == 0) rank_sum_a += midrank;
    if (t > 1) {
      has_ties = true;
      tie_term += t * t * t - t;
    }
    i = j + 1;
  }

  UTestResult r;
  r.alternative = alternative;
  const double dna = static_cast<double>(na), dnb = static_cast<double>(nb);
  r.u = rank_sum_a - dna * (dna + 1.0) / 2.0;

  const bool use_exact = method == PValueMethod::Exact ||
                         (method == PValueMethod::Auto && n <= 16 && !has_ties);
  if (use_exact) {
    if (has_ties) throw ArgumentError("exact Mann-Whitney p-value requires tie-free samples");
    const auto counts = exact_u_counts(static_cast<int>(na), static_cast<int>(nb));
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto u_obs = static_cast<std::size_t>(std::llround(r.u));
    double le = 0.0, ge = 0.0;
    for (std::size_t u = 0; u < counts.size(); ++u) {
      if (u <= u_obs) le += counts[u];
      if (u >= u_obs) ge += counts[u];
    }
    le /= total;
    ge /= total;
    switch (alternative) {
      case Alternative::Less: r.p_value = le; break;
      case Alternative::Greater: r.p_value = ge; break;
      case Alternative::TwoSided: r.p_value = std::min(1.0, 2.0 * std::min(le, ge)); break;
    }
    r.exact = true;
    return r;
  }

  const double mu = dna * dnb / 2.0;
  const double dn = static_cast<double>(n);
  double var = dna * dnb / 12.0 * (dn + 1.0);
  if (n > 1) var -= dna * dnb / 12.0 * tie_term / (dn * (dn - 1.0));
  const double sigma = std::sqrt(std::max(var, 0.0));
  if (sigma == 0.0) {
    r.p_value = 1.0;
    return r;
  }
  switch (alternative) {
    case Alternative::Less:
      r.p_value = normal_cdf((r.u - mu + 0.5) / sigma);
      break;
    case Alternative::Greater:
      r.p_value = 1.0 - normal_cdf((r.u - mu - 0.5) / sigma);
      break;
    case Alternative::TwoSided: {
      const double z = (std::abs(r.u - mu) - 0.5) / sigma;
      r.p_value = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::max(z, 0.0))));
      break;
    }
  }
  r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  return r;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("mean of an empty sample");
  MeanStd s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace cernet
