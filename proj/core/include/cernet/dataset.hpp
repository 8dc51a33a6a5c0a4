#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cernet/model.hpp"

namespace cernet::data {

inline constexpr int kDatasetFormatVersion = 1;

// Per-dimension affine map raw -> [lo, hi]; a dimension with max == min
// maps to the midpoint of the target range.
struct Normalization {
  std::vector<double> min;
  std::vector<double> max;
  double lo = -0.9;
  double hi = 0.9;

  bool operator==(const Normalization&) const = default;
};

struct TrajectoryClass {
  std::string label;
  Matrix points;  // T x D

  bool operator==(const TrajectoryClass& other) const {
    return label == other.label && points.rows() == other.points.rows() &&
           points.cols() == other.points.cols() && points == other.points;
  }
};

struct TrajectoryDataset {
  std::vector<TrajectoryClass> classes;
  std::optional<Normalization> normalization;

  int num_classes() const { return static_cast<int>(classes.size()); }
  int timesteps() const { return classes.empty() ? 0 : static_cast<int>(classes[0].points.rows()); }
  int dim() const { return classes.empty() ? 0 : static_cast<int>(classes[0].points.cols()); }

  // Non-empty, equal T and D across classes, finite points.
  void validate() const;

  bool operator==(const TrajectoryDataset&) const = default;
};

std::string dataset_to_json(const TrajectoryDataset& dataset);
TrajectoryDataset dataset_from_json(const std::string& text);
void save_dataset(const TrajectoryDataset& dataset, const std::filesystem::path& path);
TrajectoryDataset load_dataset(const std::filesystem::path& path);

Normalization fit_normalization(const TrajectoryDataset& raw, double lo = -0.9, double hi = 0.9);
Matrix apply_normalization(const Matrix& raw, const Normalization& stats);
Matrix denormalize(const Matrix& normalized, const Normalization& stats);

// Fits per-dimension stats over all classes and maps every class into
// [lo, hi]; the stats are stored on the result.
TrajectoryDataset normalize(const TrajectoryDataset& raw, double lo = -0.9, double hi = 0.9);

enum class CurveFamily { Ellipse, Lissajous, Polygon, Spiral, FigureEight };

std::string_view to_string(CurveFamily family);

struct CurveParams {
  CurveFamily family = CurveFamily::Ellipse;
  double amp_x = 1.0;
  double amp_y = 1.0;
  double phase = 0.0;     // radians
  double rotation = 0.0;  // radians, applied about the curve centre
  int shape = 0;          // polygon sides, lissajous frequency index, spiral turns
};

struct SyntheticSpec {
  int num_classes = 5;
  int timesteps = 100;
  int dim = 3;
  int hold_tail = 10;  // trailing steps repeating the final drawn point
  std::uint64_t seed = 0;
  // One entry per class; empty means derive from the seed.
  std::vector<CurveParams> curves;
};

// Curve parameters used when SyntheticSpec::curves is empty: families cycle
// through the five kinds, with seeded variation in size, phase and rotation.
std::vector<CurveParams> default_curves(int num_classes, std::uint64_t seed);

// Planar (constant z) trajectories in desk-scale raw units, normalized into
// [-0.9, 0.9] with the stats stored on the dataset.
TrajectoryDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace cernet::data
