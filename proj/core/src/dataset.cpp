#include "cernet/dataset.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "json_util.hpp"

namespace cernet::data {

namespace {

using detail::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Table-top drawing area in metres; z is the table height.
constexpr double kCentreX = 0.35;
constexpr double kCentreY = 0.10;
constexpr double kTableZ = -0.25;
constexpr double kScale = 0.08;

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(rng);
}

// Point on the unrotated curve at progress s in [0, 1].
std::pair<double, double> curve_point(const CurveParams& c, double s) {
  const double a = kTwoPi * s + c.phase;
  switch (c.family) {
    case CurveFamily::Ellipse:
      return {c.amp_x * std::cos(a), c.amp_y * std::sin(a)};
    case CurveFamily::Lissajous: {
      // 1:2 would duplicate the figure-eight, so the ratio starts at 2:3.
      const int fx = std::max(1, c.shape) + 1;
      return {c.amp_x * std::sin(fx * kTwoPi * s + c.phase),
              c.amp_y * std::sin((fx + 1) * kTwoPi * s)};
    }
    case CurveFamily::FigureEight:
      return {c.amp_x * std::sin(a), c.amp_y * std::sin(a) * std::cos(a) * 2.0};
    case CurveFamily::Spiral: {
      const int turns = std::max(1, c.shape);
      const double r = 0.15 + 0.85 * s;
      const double ang = turns * kTwoPi * s + c.phase;
      return {c.amp_x * r * std::cos(ang), c.amp_y * r * std::sin(ang)};
    }
    case CurveFamily::Polygon: {
      const int sides = std::max(3, c.shape);
      const double pos = s * sides;
      const int edge = std::min(static_cast<int>(pos), sides - 1);
      const double frac = pos - edge;
      const double a0 = kTwoPi * edge / sides + c.phase;
      const double a1 = kTwoPi * (edge + 1) / sides + c.phase;
      return {c.amp_x * ((1 - frac) * std::cos(a0) + frac * std::cos(a1)),
              c.amp_y * ((1 - frac) * std::sin(a0) + frac * std::sin(a1))};
    }
  }
  return {0.0, 0.0};
}

}  // namespace

void TrajectoryDataset::validate() const {
  if (classes.empty()) throw ArgumentError("dataset has no classes");
  const auto T = classes[0].points.rows();
  const auto D = classes[0].points.cols();
  if (T < 1 || D < 1) throw ArgumentError("dataset sequences must be non-empty");
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto& pts = classes[k].points;
    if (pts.rows() != T)
      throw ArgumentError("class " + std::to_string(k) + " has " +
                          std::to_string(pts.rows()) + " timesteps, expected " +
                          std::to_string(T));
    if (pts.cols() != D)
      throw ArgumentError("class " + std::to_string(k) + " has dimension " +
                          std::to_string(pts.cols()) + ", expected " + std::to_string(D));
    if (!pts.allFinite())
      throw ArgumentError("class " + std::to_string(k) + " has non-finite points");
  }
  if (normalization) {
    if (static_cast<Eigen::Index>(normalization->min.size()) != D ||
        static_cast<Eigen::Index>(normalization->max.size()) != D)
      throw ArgumentError("normalization stats do not match dimension");
  }
}

std::string dataset_to_json(const TrajectoryDataset& dataset) {
  dataset.validate();
  json meta{{"T", dataset.timesteps()}, {"D", dataset.dim()}};
  if (dataset.normalization) {
    const auto& n = *dataset.normalization;
    meta["normalization"] = json{
        {"min", n.min}, {"max", n.max}, {"target_range", json::array({n.lo, n.hi})}};
  } else {
    meta["normalization"] = nullptr;
  }
  json classes = json::array();
  for (const auto& c : dataset.classes)
    classes.push_back(json{{"label", c.label}, {"points", detail::to_json(c.points)}});
  json doc{{"format_version", kDatasetFormatVersion}, {"meta", meta}, {"classes", classes}};
  return doc.dump() + "\n";
}

TrajectoryDataset dataset_from_json(const std::string& text) {
  const json doc = detail::parse_text(text, "dataset");
  const int version =
      detail::integer(detail::field(doc, "format_version", ""), "format_version");
  if (version != kDatasetFormatVersion)
    throw ParseError("format_version", "unsupported version " + std::to_string(version));

  const json& meta = detail::field(doc, "meta", "");
  const int T = detail::integer(detail::field(meta, "T", "meta"), "meta.T");
  const int D = detail::integer(detail::field(meta, "D", "meta"), "meta.D");
  if (T < 1) throw ParseError("meta.T", "must be >= 1");
  if (D < 1) throw ParseError("meta.D", "must be >= 1");

  TrajectoryDataset ds;
  const json& classes = detail::field(doc, "classes", "");
  if (!classes.is_array() || classes.empty())
    throw ParseError("classes", "expected a non-empty array");
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const std::string base = "classes[" + std::to_string(k) + "]";
    const json& label = detail::field(classes[k], "label", base);
    if (!label.is_string()) throw ParseError(base + ".label", "expected a string");
    const json& points = detail::field(classes[k], "points", base);
    ds.classes.push_back(
        {label.get<std::string>(), detail::matrix_from(points, base + ".points", T, D)});
  }

  const json& norm = detail::field(meta, "normalization", "meta");
  if (!norm.is_null()) {
    const std::string base = "meta.normalization";
    Normalization n;
    const Vector mn = detail::vector_from(detail::field(norm, "min", base), base + ".min", D);
    const Vector mx = detail::vector_from(detail::field(norm, "max", base), base + ".max", D);
    n.min.assign(mn.data(), mn.data() + D);
    n.max.assign(mx.data(), mx.data() + D);
    const Vector range = detail::vector_from(detail::field(norm, "target_range", base),
                                             base + ".target_range", 2);
    n.lo = range[0];
    n.hi = range[1];
    if (!(n.hi > n.lo)) throw ParseError(base + ".target_range", "expected lo < hi");
    ds.normalization = std::move(n);
  }
  return ds;
}

void save_dataset(const TrajectoryDataset& dataset, const std::filesystem::path& path) {
  detail::write_file(path, dataset_to_json(dataset));
}

TrajectoryDataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(detail::read_file(path));
}

Normalization fit_normalization(const TrajectoryDataset& raw, double lo, double hi) {
  raw.validate();
  if (!(hi > lo)) throw ArgumentError("target range must satisfy lo < hi");
  const int D = raw.dim();
  Normalization n;
  n.lo = lo;
  n.hi = hi;
  n.min.assign(static_cast<std::size_t>(D), std::numeric_limits<double>::infinity());
  n.max.assign(static_cast<std::size_t>(D), -std::numeric_limits<double>::infinity());
  for (const auto& c : raw.classes) {
    for (int d = 0; d < D; ++d) {
      n.min[d] = std::min(n.min[d], c.points.col(d).minCoeff());
      n.max[d] = std::max(n.max[d], c.points.col(d).maxCoeff());
    }
  }
  return n;
}

Matrix apply_normalization(const Matrix& raw, const Normalization& stats) {
  if (static_cast<std::size_t>(raw.cols()) != stats.min.size())
    throw ArgumentError("normalization stats do not match dimension");
  Matrix out(raw.rows(), raw.cols());
  const double mid = 0.5 * (stats.lo + stats.hi);
  for (Eigen::Index d = 0; d < raw.cols(); ++d) {
    const double mn = stats.min[d], mx = stats.max[d];
    if (mn == stats.lo && mx == stats.hi) {
      out.col(d) = raw.col(d);
    } else if (mx > mn) {
      const double scale = (stats.hi - stats.lo) / (mx - mn);
      out.col(d) = ((raw.col(d).array() - mn) * scale + stats.lo).matrix();
    } else {
      out.col(d).setConstant(mid);
    }
  }
  return out;
}

Matrix denormalize(const Matrix& normalized, const Normalization& stats) {
  if (static_cast<std::size_t>(normalized.cols()) != stats.min.size())
    throw ArgumentError("normalization stats do not match dimension");
  Matrix out(normalized.rows(), normalized.cols());
  for (Eigen::Index d = 0; d < normalized.cols(); ++d) {
    const double mn = stats.min[d], mx = stats.max[d];
    if (mn == stats.lo && mx == stats.hi) {
      out.col(d) = normalized.col(d);
    } else if (mx > mn) {
      const double scale = (mx - mn) / (stats.hi - stats.lo);
      out.col(d) = ((normalized.col(d).array() - stats.lo) * scale + mn).matrix();
    } else {
      out.col(d).setConstant(mn);
    }
  }
  return out;
}

TrajectoryDataset normalize(const TrajectoryDataset& raw, double lo, double hi) {
  TrajectoryDataset out;
  const Normalization stats = fit_normalization(raw, lo, hi);
  for (const auto& c : raw.classes)
    out.classes.push_back({c.label, apply_normalization(c.points, stats)});
  out.normalization = stats;
  return out;
}

std::string_view to_string(CurveFamily family) {
  switch (family) {
    case CurveFamily::Ellipse: return "ellipse";
    case CurveFamily::Lissajous: return "lissajous";
    case CurveFamily::Polygon: return "polygon";
    case CurveFamily::Spiral: return "spiral";
    case CurveFamily::FigureEight: return "figure_eight";
  }
  return "unknown";
}

std::vector<CurveParams> default_curves(int num_classes, std::uint64_t seed) {
  static constexpr CurveFamily kCycle[] = {CurveFamily::Ellipse, CurveFamily::Lissajous,
                                           CurveFamily::Polygon, CurveFamily::Spiral,
                                           CurveFamily::FigureEight};
  std::mt19937_64 rng(seed);
  std::vector<CurveParams> curves;
  for (int k = 0; k < num_classes; ++k) {
    const int round = k / 5;
    CurveParams c;
    c.family = kCycle[k % 5];
    c.amp_x = uniform(rng, 0.8, 1.0);
    c.amp_y = uniform(rng, 0.6, 1.0);
    c.phase = uniform(rng, 0.0, kTwoPi);
    c.rotation = round * 0.7 + uniform(rng, -0.2, 0.2);
    switch (c.family) {
      case CurveFamily::Ellipse:
        c.amp_y *= 0.5 + 0.15 * round;  // keep ellipses visibly non-circular
        break;
      case CurveFamily::Lissajous: c.shape = 1 + round % 3; break;
      case CurveFamily::Polygon: c.shape = 3 + round % 4; break;
      case CurveFamily::Spiral: c.shape = 1 + round % 2; break;
      case CurveFamily::FigureEight: break;
    }
    curves.push_back(c);
  }
  return curves;
}

TrajectoryDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes < 1) throw ArgumentError("synthetic dataset needs at least one class");
  if (spec.timesteps < 2) throw ArgumentError("synthetic dataset needs at least two timesteps");
  if (spec.dim < 1) throw ArgumentError("synthetic dataset needs dimension >= 1");
  if (spec.hold_tail < 0 || spec.hold_tail > spec.timesteps - 2)
    throw ArgumentError("hold_tail must leave at least two drawn steps");

  const auto curves =
      spec.curves.empty() ? default_curves(spec.num_classes, spec.seed) : spec.curves;
  if (static_cast<int>(curves.size()) != spec.num_classes)
    throw ArgumentError("need one curve per class");

  const int drawn = spec.timesteps - spec.hold_tail;
  TrajectoryDataset raw;
  for (int k = 0; k < spec.num_classes; ++k) {
    const CurveParams& c = curves[static_cast<std::size_t>(k)];
    Matrix pts(spec.timesteps, spec.dim);
    const double cr = std::cos(c.rotation), sr = std::sin(c.rotation);
    for (int t = 0; t < spec.timesteps; ++t) {
      const double s = static_cast<double>(std::min(t, drawn - 1)) / (drawn - 1);
      const auto [u, v] = curve_point(c, s);
      const double x = kCentreX + kScale * (cr * u - sr * v);
      const double y = kCentreY + kScale * (sr * u + cr * v);
      for (int d = 0; d < spec.dim; ++d) {
        pts(t, d) = d == 0 ? x : d == 1 ? y : kTableZ;
      }
    }
    raw.classes.push_back({std::string(to_string(c.family)) + "_" + std::to_string(k), pts});
  }
  return normalize(raw);
}

}  // namespace cernet::data
