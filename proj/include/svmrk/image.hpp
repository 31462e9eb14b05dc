#pragma once

#include "svmrk/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace svmrk {

/// Scalar raster with physical placement. Pixel (i, j) is stored at
/// index i + extent[0] * j and its centroid sits at origin + voxel_size * (i, j),
/// i.e. `origin` is the centroid of the first pixel.
struct ImageGrid {
  int dim = 2;
  std::array<int, 2> extent{1, 1};
  double voxel_size = 1.0;
  Vec2 origin = Vec2::Zero();
  std::vector<double> intensity;

  std::size_t size() const {
    return static_cast<std::size_t>(extent[0]) * static_cast<std::size_t>(extent[1]);
  }
  double at(int i, int j = 0) const { return intensity[i + static_cast<std::size_t>(extent[0]) * j]; }
  double& at(int i, int j = 0) { return intensity[i + static_cast<std::size_t>(extent[0]) * j]; }
  Vec2 centroid(int i, int j = 0) const {
    Vec2 c = origin;
    c(0) += voxel_size * i;
    if (dim == 2) c(1) += voxel_size * j;
    return c;
  }
  /// Physical rectangle covered by the pixel cells.
  Domain bounds() const;
  void validate() const;
};

/// Per-pixel class: -1 matrix, +1 inclusion.
struct LabelGrid {
  std::array<int, 2> extent{1, 1};
  std::vector<std::int8_t> labels;
  std::size_t count(int label) const;
};

struct LabeledDataset {
  int dim = 2;
  std::vector<Vec2> points;
  std::vector<int> labels;

  std::size_t size() const { return points.size(); }
  void validate(bool require_both_classes) const;
};

struct Circle {
  Vec2 center;
  double radius = 1.0;
};

/// Ground truth for the synthetic validation image.
struct SyntheticTruth {
  std::vector<Circle> circles;
  double extent_x = 10.0;  ///< physical x-extent L of the image (square domain)

  bool inside(const Vec2& x) const;
  /// Circle whose boundary is nearest to x.
  std::size_t owner(const Vec2& x) const;
  void validate() const;
};

enum class ImageFormat { Pgm, Raw, Csv };

ImageFormat parse_image_format(const std::string& name);

/// Physical placement for formats that do not carry it (PGM, CSV). When
/// `origin` is unset the first centroid is placed at half a voxel.
struct ImagePlacement {
  double voxel_size = 1.0;
  std::optional<Vec2> origin;
};

ImageGrid load_image(const std::filesystem::path& path, ImageFormat format,
                     const ImagePlacement& placement = {});

/// P2 (ascii) or P5 (binary) with the given maxval; intensities are rounded.
void write_pgm(const ImageGrid& img, const std::filesystem::path& path, bool binary = true,
               int maxval = 255);

/// Raw little-endian payload plus `<path>.json` sidecar. dtype: uint8 | uint16 | float32 | float64.
void write_raw(const ImageGrid& img, const std::filesystem::path& path,
               const std::string& dtype = "float64");

void write_csv(const ImageGrid& img, const std::filesystem::path& path);

struct OtsuResult {
  LabelGrid labels;
  double threshold = 0.0;  ///< upper edge of the last background bin
  int threshold_bin = 0;
};

/// Otsu's method on a 256-bin histogram over [0, 1]. Label +1 iff the pixel's bin
/// lies above the threshold bin (equivalently intensity > threshold for
/// intensities not sitting exactly on a bin edge).
OtsuResult otsu_threshold(const ImageGrid& img);

LabeledDataset make_training_set(const ImageGrid& img, const LabelGrid& labels);

struct SynthOptions {
  int resolution = 224;         ///< pixels per side before downscaling
  double noise_sigma = 0.0;     ///< additive Gaussian noise, clamped to [0, 1]
  int output_resolution = 0;    ///< 0 keeps `resolution`
  std::uint64_t seed = 1;
};

/// Binary circle image with optional noise and box-average downscaling.
ImageGrid synth_image(const SyntheticTruth& truth, const SynthOptions& opts);

/// Integer-factor box average.
ImageGrid box_downscale(const ImageGrid& img, int factor);

/// Area-weighted box average to an arbitrary coarser extent.
ImageGrid area_resample(const ImageGrid& img, std::array<int, 2> out_extent);

/// Standard normal deviates from std::mt19937_64 via Box-Muller. The engine's
/// output is fixed by the standard, and the transform is ours, so the sequence
/// is identical on every standard library.
class GaussianNoise {
 public:
  explicit GaussianNoise(std::uint64_t seed) : engine_(seed) {}
  double operator()();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace svmrk
