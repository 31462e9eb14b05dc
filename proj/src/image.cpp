#include "svmrk/image.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace svmrk {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open image file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Reads one whitespace-delimited header token, skipping '#' comments.
bool next_header_token(const std::string& buf, std::size_t& pos, std::string& tok) {
  tok.clear();
  while (pos < buf.size()) {
    char c = buf[pos];
    if (c == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) {
    tok.push_back(buf[pos++]);
  }
  return !tok.empty();
}

int parse_header_int(const std::string& buf, std::size_t& pos, const char* what) {
  std::string tok;
  if (!next_header_token(buf, pos, tok)) throw Error(std::string("malformed header: missing ") + what);
  try {
    std::size_t used = 0;
    long v = std::stol(tok, &used);
    if (used != tok.size() || v <= 0 || v > std::numeric_limits<int>::max()) throw Error("");
    return static_cast<int>(v);
  } catch (...) {
    throw Error(std::string("malformed header: bad ") + what + " '" + tok + "'");
  }
}

void place(ImageGrid& img, const ImagePlacement& placement) {
  if (!(placement.voxel_size > 0.0)) throw Error("voxel size must be positive");
  img.voxel_size = placement.voxel_size;
  if (placement.origin) {
    img.origin = *placement.origin;
  } else {
    img.origin = Vec2::Constant(0.5 * placement.voxel_size);
    if (img.dim == 1) img.origin(1) = 0.0;
  }
}

ImageGrid load_pgm(const std::filesystem::path& path, const ImagePlacement& placement) {
  const std::string buf = read_file(path);
  std::size_t pos = 0;
  std::string magic;
  if (!next_header_token(buf, pos, magic) || (magic != "P2" && magic != "P5")) {
    throw Error("malformed header: not a P2/P5 PGM file");
  }
  ImageGrid img;
  img.dim = 2;
  img.extent[0] = parse_header_int(buf, pos, "width");
  img.extent[1] = parse_header_int(buf, pos, "height");
  const int maxval = parse_header_int(buf, pos, "maxval");
  if (maxval > 65535) throw Error("unsupported bit depth: maxval " + std::to_string(maxval));
  const std::size_t n = img.size();
  img.intensity.resize(n);
  if (magic == "P2") {
    std::string tok;
    for (std::size_t k = 0; k < n; ++k) {
      if (!next_header_token(buf, pos, tok)) throw Error("payload length mismatch");
      long v = 0;
      try {
        v = std::stol(tok);
      } catch (...) {
        throw Error("malformed payload value '" + tok + "'");
      }
      if (v < 0 || v > maxval) throw Error("payload value out of range");
      img.intensity[k] = static_cast<double>(v) / maxval;
    }
    std::string extra;
    if (next_header_token(buf, pos, extra)) throw Error("payload length mismatch");
  } else {
    ++pos;  // single whitespace after maxval
    const std::size_t bytes = maxval < 256 ? 1 : 2;
    if (buf.size() < pos || buf.size() - pos != n * bytes) throw Error("payload length mismatch");
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos);
    for (std::size_t k = 0; k < n; ++k) {
      unsigned v = bytes == 1 ? p[k] : (static_cast<unsigned>(p[2 * k]) << 8) | p[2 * k + 1];
      if (v > static_cast<unsigned>(maxval)) throw Error("payload value out of range");
      img.intensity[k] = static_cast<double>(v) / maxval;
    }
  }
  place(img, placement);
  return img;
}

ImageGrid load_csv(const std::filesystem::path& path, const ImagePlacement& placement) {
  const std::string buf = read_file(path);
  ImageGrid img;
  img.dim = 1;
  std::string tok;
  for (char c : buf + "\n") {
    if (c == ',' || c == '\n' || c == '\r' || std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) {
        double v = 0.0;
        try {
          v = std::stod(tok);
        } catch (...) {
          throw Error("malformed csv value '" + tok + "'");
        }
        if (!(v >= 0.0 && v <= 1.0)) throw Error("csv intensity outside [0, 1]: " + tok);
        img.intensity.push_back(v);
        tok.clear();
      }
    } else {
      tok.push_back(c);
    }
  }
  if (img.intensity.empty()) throw Error("empty csv image");
  img.extent = {static_cast<int>(img.intensity.size()), 1};
  place(img, placement);
  return img;
}

std::size_t dtype_bytes(const std::string& dtype) {
  if (dtype == "uint8") return 1;
  if (dtype == "uint16") return 2;
  if (dtype == "float32") return 4;
  if (dtype == "float64") return 8;
  throw Error("unsupported bit depth: dtype '" + dtype + "'");
}

template <typename T>
T load_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <typename T>
void store_le(std::string& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

ImageGrid load_raw(const std::filesystem::path& path) {
  const auto sidecar = std::filesystem::path(path.string() + ".json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(sidecar));
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed header: sidecar " + sidecar.string() + ": " + e.what());
  }
  ImageGrid img;
  try {
    const auto dims = meta.at("dims").get<std::vector<int>>();
    if (dims.empty() || dims.size() > 2) throw Error("malformed header: dims must have 1 or 2 entries");
    img.dim = static_cast<int>(dims.size());
    img.extent = {dims[0], img.dim == 2 ? dims[1] : 1};
    img.voxel_size = meta.at("voxel_size").get<double>();
    const auto origin = meta.at("origin").get<std::vector<double>>();
    if (origin.size() != dims.size()) throw Error("malformed header: origin/dims size mismatch");
    img.origin = Vec2(origin[0], img.dim == 2 ? origin[1] : 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed header: ") + e.what());
  }
  const std::string dtype = meta.value("dtype", "float64");
  const std::size_t bytes = dtype_bytes(dtype);
  if (img.extent[0] < 1 || img.extent[1] < 1) throw Error("malformed header: extents must be >= 1");
  const std::string payload = read_file(path);
  const std::size_t n = img.size();
  if (payload.size() != n * bytes) throw Error("payload length mismatch");
  img.intensity.resize(n);
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t k = 0; k < n; ++k) {
    const unsigned char* q = p + k * bytes;
    double v = 0.0;
    if (dtype == "uint8") v = q[0] / 255.0;
    else if (dtype == "uint16") v = load_le<std::uint16_t>(q) / 65535.0;
    else if (dtype == "float32") v = load_le<float>(q);
    else v = load_le<double>(q);
    if (!(v >= 0.0 && v <= 1.0)) throw Error("raw intensity outside [0, 1]");
    img.intensity[k] = v;
  }
  img.validate();
  return img;
}

}  // namespace

Domain ImageGrid::bounds() const {
  Domain d;
  d.dim = dim;
  d.lo = origin - Vec2::Constant(0.5 * voxel_size);
  d.hi = d.lo;
  d.hi(0) += voxel_size * extent[0];
  d.hi(1) += voxel_size * extent[1];
  if (dim == 1) {
    d.lo(1) = 0.0;
    d.hi(1) = 0.0;
  }
  return d;
}

void ImageGrid::validate() const {
  if (dim != 1 && dim != 2) throw Error("image dimension must be 1 or 2");
  if (extent[0] < 1 || extent[1] < 1) throw Error("image extents must be >= 1");
  if (dim == 1 && extent[1] != 1) throw Error("1D image must have extent[1] == 1");
  if (!(voxel_size > 0.0)) throw Error("voxel size must be positive");
  if (intensity.size() != size()) throw Error("intensity count does not match extents");
}

std::size_t LabelGrid::count(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), static_cast<std::int8_t>(label)));
}

void LabeledDataset::validate(bool require_both_classes) const {
  if (points.size() != labels.size()) throw Error("dataset points/labels size mismatch");
  if (points.size() < 2) throw Error("dataset needs at least two points");
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1) pos = true;
    else if (y == -1) neg = true;
    else throw Error("dataset labels must be +1 or -1");
  }
  if (require_both_classes && !(pos && neg)) throw Error("single-class data: both labels must be present");
}

bool SyntheticTruth::inside(const Vec2& x) const {
  return std::any_of(circles.begin(), circles.end(), [&](const Circle& c) {
    return (x - c.center).squaredNorm() <= c.radius * c.radius;
  });
}

std::size_t SyntheticTruth::owner(const Vec2& x) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < circles.size(); ++j) {
    const double d = std::abs((x - circles[j].center).norm() - circles[j].radius);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

void SyntheticTruth::validate() const {
  if (circles.empty()) throw Error("synthetic truth needs at least one circle");
  for (const auto& c : circles) {
    if (!(c.radius > 0.0)) throw Error("circle radius must be positive");
  }
  if (!(extent_x > 0.0)) throw Error("image extent must be positive");
}

ImageFormat parse_image_format(const std::string& name) {
  if (name == "pgm") return ImageFormat::Pgm;
  if (name == "raw") return ImageFormat::Raw;
  if (name == "csv") return ImageFormat::Csv;
  throw Error("unknown image format '" + name + "' (expected pgm|raw|csv)");
}

ImageGrid load_image(const std::filesystem::path& path, ImageFormat format,
                     const ImagePlacement& placement) {
  if (!std::filesystem::exists(path)) throw Error("image file not found: " + path.string());
  ImageGrid img;
  switch (format) {
    case ImageFormat::Pgm: img = load_pgm(path, placement); break;
    case ImageFormat::Raw: img = load_raw(path); break;
    case ImageFormat::Csv: img = load_csv(path, placement); break;
  }
  img.validate();
  return img;
}

void write_pgm(const ImageGrid& img, const std::filesystem::path& path, bool binary, int maxval) {
  img.validate();
  if (maxval < 1 || maxval > 65535) throw Error("unsupported bit depth: maxval " + std::to_string(maxval));
  std::string out = (binary ? "P5\n" : "P2\n") + std::to_string(img.extent[0]) + " " +
                    std::to_string(img.extent[1]) + "\n" + std::to_string(maxval) + "\n";
  for (std::size_t k = 0; k < img.size(); ++k) {
    const double v = std::clamp(img.intensity[k], 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::lround(v * maxval));
    if (!binary) {
      out += std::to_string(q);
      out += ((k + 1) % static_cast<std::size_t>(img.extent[0]) == 0) ? '\n' : ' ';
    } else if (maxval < 256) {
      out.push_back(static_cast<char>(q));
    } else {
      out.push_back(static_cast<char>(q >> 8));
      out.push_back(static_cast<char>(q & 0xff));
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << out;
}

void write_raw(const ImageGrid& img, const std::filesystem::path& path, const std::string& dtype) {
  img.validate();
  const std::size_t bytes = dtype_bytes(dtype);
  std::string payload;
  payload.reserve(img.size() * bytes);
  for (double v : img.intensity) {
    if (dtype == "uint8") payload.push_back(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255)));
    else if (dtype == "uint16") store_le<std::uint16_t>(payload, static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535)));
    else if (dtype == "float32") store_le<float>(payload, static_cast<float>(v));
    else store_le<double>(payload, v);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << payload;
  nlohmann::json meta;
  if (img.dim == 1) {
    meta["dims"] = {img.extent[0]};
    meta["origin"] = {img.origin(0)};
  } else {
    meta["dims"] = {img.extent[0], img.extent[1]};
    meta["origin"] = {img.origin(0), img.origin(1)};
  }
  meta["voxel_size"] = img.voxel_size;
  meta["dtype"] = dtype;
  meta["endian"] = "little";
  std::ofstream s(path.string() + ".json");
  s << meta.dump(2) << "\n";
}

void write_csv(const ImageGrid& img, const std::filesystem::path& path) {
  img.validate();
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f.precision(17);
  for (int j = 0; j < img.extent[1]; ++j) {
    for (int i = 0; i < img.extent[0]; ++i) {
      f << img.at(i, j) << (i + 1 == img.extent[0] ? "\n" : ",");
    }
  }
}

OtsuResult otsu_threshold(const ImageGrid& img) {
  img.validate();
  constexpr int kBins = 256;
  std::array<double, kBins> hist{};
  std::vector<int> bin(img.size());
  for (std::size_t k = 0; k < img.size(); ++k) {
    const double v = std::clamp(img.intensity[k], 0.0, 1.0);
    bin[k] = std::min(kBins - 1, static_cast<int>(std::floor(v * kBins)));
    hist[bin[k]] += 1.0;
  }
  const double total = static_cast<double>(img.size());
  if (std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0.0; }) < 2) {
    throw Error("degenerate histogram: image needs at least two distinct intensity levels");
  }
  double mu_total = 0.0;
  for (int b = 0; b < kBins; ++b) mu_total += hist[b] / total * (b + 0.5) / kBins;

  // Zeroth and first cumulative moments; between-class variance per split.
  std::array<double, kBins> between{};
  double omega = 0.0, mu = 0.0, best = -1.0;
  for (int b = 0; b < kBins - 1; ++b) {
    omega += hist[b] / total;
    mu += hist[b] / total * (b + 0.5) / kBins;
    const double denom = omega * (1.0 - omega);
    between[b] = denom > 0.0 ? (mu_total * omega - mu) * (mu_total * omega - mu) / denom : 0.0;
    best = std::max(best, between[b]);
  }
  // Pick the centre of the maximizing plateau so exact ties are split symmetrically.
  int first = -1, last = -1;
  for (int b = 0; b < kBins - 1; ++b) {
    if (between[b] >= best * (1.0 - 1e-12)) {
      if (first < 0) first = b;
      last = b;
    }
  }
  const int split = (first + last) / 2;

  OtsuResult res;
  res.threshold_bin = split;
  res.threshold = static_cast<double>(split + 1) / kBins;
  res.labels.extent = img.extent;
  res.labels.labels.resize(img.size());
  for (std::size_t k = 0; k < img.size(); ++k) res.labels.labels[k] = bin[k] > split ? 1 : -1;
  return res;
}

LabeledDataset make_training_set(const ImageGrid& img, const LabelGrid& labels) {
  img.validate();
  if (labels.extent != img.extent || labels.labels.size() != img.size()) {
    throw Error("extent mismatch between image and label grid");
  }
  LabeledDataset data;
  data.dim = img.dim;
  data.points.reserve(img.size());
  data.labels.reserve(img.size());
  for (int j = 0; j < img.extent[1]; ++j) {
    for (int i = 0; i < img.extent[0]; ++i) {
      data.points.push_back(img.centroid(i, j));
      data.labels.push_back(labels.labels[i + static_cast<std::size_t>(img.extent[0]) * j]);
    }
  }
  return data;
}

double GaussianNoise::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 53-bit uniforms in (0, 1].
  auto uniform = [this] { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; };
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

ImageGrid synth_image(const SyntheticTruth& truth, const SynthOptions& opts) {
  truth.validate();
  if (opts.resolution < 1) throw Error("resolution must be >= 1");
  if (opts.noise_sigma < 0.0) throw Error("noise sigma must be non-negative");
  ImageGrid img;
  img.dim = 2;
  img.extent = {opts.resolution, opts.resolution};
  img.voxel_size = truth.extent_x / opts.resolution;
  img.origin = Vec2::Constant(0.5 * img.voxel_size);
  img.intensity.resize(img.size());
  GaussianNoise noise(opts.seed);
  for (int j = 0; j < opts.resolution; ++j) {
    for (int i = 0; i < opts.resolution; ++i) {
      double v = truth.inside(img.centroid(i, j)) ? 1.0 : 0.0;
      if (opts.noise_sigma > 0.0) v = std::clamp(v + opts.noise_sigma * noise(), 0.0, 1.0);
      img.at(i, j) = v;
    }
  }
  const int out = opts.output_resolution == 0 ? opts.resolution : opts.output_resolution;
  if (out == opts.resolution) return img;
  if (out > opts.resolution || out < 1) throw Error("output resolution must lie in [1, resolution]");
  if (opts.resolution % out == 0) return box_downscale(img, opts.resolution / out);
  return area_resample(img, {out, out});
}

ImageGrid box_downscale(const ImageGrid& img, int factor) {
  img.validate();
  if (factor < 1) throw Error("downscale factor must be >= 1");
  for (int k = 0; k < img.dim; ++k) {
    if (img.extent[k] % factor != 0) {
      throw Error("non-divisible downscale factor " + std::to_string(factor) + " for extent " +
                  std::to_string(img.extent[k]));
    }
  }
  ImageGrid out;
  out.dim = img.dim;
  out.extent = {img.extent[0] / factor, img.dim == 2 ? img.extent[1] / factor : 1};
  out.voxel_size = img.voxel_size * factor;
  const Domain b = img.bounds();
  out.origin = b.lo + Vec2::Constant(0.5 * out.voxel_size);
  if (img.dim == 1) out.origin(1) = 0.0;
  out.intensity.assign(out.size(), 0.0);
  const int fy = img.dim == 2 ? factor : 1;
  const double inv = 1.0 / (static_cast<double>(factor) * fy);
  for (int j = 0; j < out.extent[1]; ++j) {
    for (int i = 0; i < out.extent[0]; ++i) {
      double s = 0.0;
      for (int q = 0; q < fy; ++q) {
        for (int p = 0; p < factor; ++p) s += img.at(i * factor + p, j * fy + q);
      }
      out.at(i, j) = s * inv;
    }
  }
  return out;
}

namespace {

// Row-stochastic overlap weights between `in` unit cells and `out` cells covering the same span.
std::vector<std::vector<std::pair<int, double>>> overlap_weights(int in, int out) {
  std::vector<std::vector<std::pair<int, double>>> w(out);
  const double ratio = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double lo = o * ratio, hi = (o + 1) * ratio;
    for (int k = static_cast<int>(std::floor(lo)); k < std::min(in, static_cast<int>(std::ceil(hi))); ++k) {
      const double ov = std::min(hi, k + 1.0) - std::max(lo, static_cast<double>(k));
      if (ov > 0.0) w[o].emplace_back(k, ov / ratio);
    }
  }
  return w;
}

}  // namespace

ImageGrid area_resample(const ImageGrid& img, std::array<int, 2> out_extent) {
  img.validate();
  if (img.dim == 1) out_extent[1] = 1;
  for (int k = 0; k < img.dim; ++k) {
    if (out_extent[k] < 1 || out_extent[k] > img.extent[k]) throw Error("resample extent must lie in [1, input extent]");
  }
  if (img.dim == 2 && static_cast<long>(out_extent[0]) * img.extent[1] != static_cast<long>(out_extent[1]) * img.extent[0]) {
    throw Error("resample must preserve the aspect ratio");
  }
  const auto wx = overlap_weights(img.extent[0], out_extent[0]);
  const auto wy = overlap_weights(img.extent[1], out_extent[1]);
  ImageGrid out;
  out.dim = img.dim;
  out.extent = out_extent;
  out.voxel_size = img.voxel_size * img.extent[0] / out_extent[0];
  const Domain b = img.bounds();
  out.origin = b.lo + Vec2::Constant(0.5 * out.voxel_size);
  if (img.dim == 1) out.origin(1) = 0.0;
  out.intensity.assign(out.size(), 0.0);
  for (int j = 0; j < out_extent[1]; ++j) {
    for (int i = 0; i < out_extent[0]; ++i) {
      double s = 0.0;
      for (auto [q, wq] : wy[j]) {
        for (auto [p, wp] : wx[i]) s += wp * wq * img.at(p, q);
      }
      out.at(i, j) = std::clamp(s, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace svmrk
