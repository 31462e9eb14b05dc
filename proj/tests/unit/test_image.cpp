#include "svmrk/image.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace svmrk;
namespace fs = std::filesystem;

namespace {

ImageGrid ramp(int nx, int ny, double voxel = 0.5) {
  ImageGrid img;
  img.extent = {nx, ny};
  img.voxel_size = voxel;
  img.origin = Vec2(0.25, 0.25);
  img.intensity.resize(img.size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) img.at(i, j) = double((i * 7 + j * 13) % 256) / 255.0;
  return img;
}

// Exhaustive between-class variance over all 256-bin splits.
double between_class_variance(const ImageGrid& img, int t) {
  std::vector<double> hist(256, 0.0);
  for (double v : img.intensity) hist[std::min(255, static_cast<int>(v * 256.0))] += 1.0;
  const double n = static_cast<double>(img.size());
  double w0 = 0, m0 = 0, w1 = 0, m1 = 0;
  for (int b = 0; b < 256; ++b) (b <= t ? w0 : w1) += hist[b], (b <= t ? m0 : m1) += hist[b] * b;
  if (w0 == 0 || w1 == 0) return -1.0;
  return (w0 / n) * (w1 / n) * std::pow(m0 / w0 - m1 / w1, 2);
}

double best_variance(const ImageGrid& img) {
  double best = -1.0;
  for (int t = 0; t < 255; ++t) best = std::max(best, between_class_variance(img, t));
  return best;
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("svmrk_test_" + name); }

}  // namespace

TEST_CASE("pixel centroids follow origin plus voxel times index") {
  const ImageGrid img = ramp(4, 3);
  CHECK(img.centroid(0, 0).isApprox(Vec2(0.25, 0.25)));
  CHECK(img.centroid(3, 2).isApprox(Vec2(0.25 + 1.5, 0.25 + 1.0)));
  const Domain b = img.bounds();
  CHECK(b.lo.isApprox(Vec2::Zero()));
  CHECK(b.hi.isApprox(Vec2(2.0, 1.5)));
}

TEST_CASE("otsu threshold matches exhaustive between-class variance") {
  ImageGrid img = ramp(40, 30);
  for (std::size_t k = 0; k < img.size(); ++k) img.intensity[k] = k % 3 ? 0.2 + 0.1 * img.intensity[k] : 0.8;
  const OtsuResult r = otsu_threshold(img);
  CHECK(between_class_variance(img, r.threshold_bin) == doctest::Approx(best_variance(img)).epsilon(1e-12));
  for (std::size_t k = 0; k < img.size(); ++k) {
    CHECK((r.labels.labels[k] > 0) == (std::min(255, static_cast<int>(img.intensity[k] * 256.0)) > r.threshold_bin));
  }
}

TEST_CASE("otsu labels are invariant under an affine rescaling that keeps the bins") {
  ImageGrid img = ramp(32, 24);
  for (double& v : img.intensity) v = (2.0 * std::floor(v * 127.0) + 0.5) / 256.0;
  ImageGrid scaled = img;
  for (double& v : scaled.intensity) v = 0.5 * v + 0.25;
  CHECK(otsu_threshold(img).labels.labels == otsu_threshold(scaled).labels.labels);
}

TEST_CASE("training set has one labelled point per pixel centroid") {
  ImageGrid img = ramp(6, 5);
  const OtsuResult r = otsu_threshold(img);
  const LabeledDataset d = make_training_set(img, r.labels);
  REQUIRE(d.size() == img.size());
  CHECK(d.points[7].isApprox(img.centroid(1, 1)));
  CHECK(d.labels[7] == r.labels.labels[7]);
}

TEST_CASE("box downscale and area resample preserve the integral") {
  const ImageGrid img = ramp(12, 12);
  const double mean = std::accumulate(img.intensity.begin(), img.intensity.end(), 0.0) / img.size();
  const ImageGrid b = box_downscale(img, 3);
  CHECK(b.extent == std::array<int, 2>{4, 4});
  CHECK(b.voxel_size == doctest::Approx(1.5));
  CHECK(std::accumulate(b.intensity.begin(), b.intensity.end(), 0.0) / b.size() == doctest::Approx(mean).epsilon(1e-12));
  const ImageGrid a = area_resample(img, {5, 5});
  CHECK(std::accumulate(a.intensity.begin(), a.intensity.end(), 0.0) / a.size() == doctest::Approx(mean).epsilon(1e-12));
  CHECK(a.bounds().hi.isApprox(img.bounds().hi));
  CHECK_THROWS_AS(box_downscale(img, 5), Error);
}

TEST_CASE("gaussian noise is deterministic and standard normal") {
  GaussianNoise a(42), b(42), c(43);
  double s = 0, s2 = 0;
  const int n = 200000;
  bool differs = false;
  for (int i = 0; i < n; ++i) {
    const double x = a();
    CHECK_EQ(x, b());
    differs = differs || x != c();
    s += x;
    s2 += x * x;
  }
  CHECK(differs);
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.01);
}

TEST_CASE("synthetic image is reproducible and marks circle interiors") {
  SyntheticTruth t;
  t.extent_x = 10.0;
  t.circles = {{Vec2(5.0, 5.0), 2.0}};
  SynthOptions o;
  o.resolution = 50;
  o.noise_sigma = 0.1;
  o.seed = 9;
  const ImageGrid a = synth_image(t, o), b = synth_image(t, o);
  CHECK(a.intensity == b.intensity);
  o.noise_sigma = 0.0;
  const ImageGrid clean = synth_image(t, o);
  CHECK(clean.at(25, 25) == 1.0);
  CHECK(clean.at(1, 1) == 0.0);
  o.output_resolution = 20;
  CHECK(synth_image(t, o).extent == std::array<int, 2>{20, 20});
}

TEST_CASE("image formats round-trip") {
  ImageGrid img = ramp(7, 5, 0.2);
  for (double& v : img.intensity) v = std::round(v * 255.0) / 255.0;
  const fs::path pgm = temp_path("rt.pgm"), csv = temp_path("rt.csv"), raw = temp_path("rt.raw");
  write_pgm(img, pgm);
  write_raw(img, raw);
  ImagePlacement place{0.2, Vec2(0.25, 0.25)};
  const ImageGrid p = load_image(pgm, ImageFormat::Pgm, place);
  const ImageGrid r = load_image(raw, ImageFormat::Raw, place);
  ImageGrid row = ramp(9, 1, 0.2);
  row.dim = 1;
  write_csv(row, csv);
  const ImageGrid c = load_image(csv, ImageFormat::Csv, place);
  CHECK(c.dim == 1);
  REQUIRE(c.extent == row.extent);
  for (std::size_t k = 0; k < row.size(); ++k) CHECK(c.intensity[k] == doctest::Approx(row.intensity[k]).epsilon(1e-15));
  for (const ImageGrid* g : {&p, &r}) {
    REQUIRE(g->extent == img.extent);
    for (std::size_t k = 0; k < img.size(); ++k) CHECK(g->intensity[k] == doctest::Approx(img.intensity[k]).epsilon(1e-12));
    CHECK(g->centroid(0, 0).isApprox(Vec2(0.25, 0.25)));
  }
  fs::remove(pgm);
  fs::remove(csv);
  fs::remove(raw);
  fs::remove(raw.string() + ".json");
}

TEST_CASE("loading a missing image names the path") {
  const fs::path missing = temp_path("does_not_exist.pgm");
  try {
    load_image(missing, ImageFormat::Pgm);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(missing.string()) != std::string::npos);
  }
}
