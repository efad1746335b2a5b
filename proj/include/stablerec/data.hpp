#ifndef STABLEREC_DATA_HPP
#define STABLEREC_DATA_HPP

#include "stablerec/linops.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stablerec {

struct GrayImage {
  Shape shape;
  Vector pixels; // row-major
  /// Set by normalize() when the input had no dynamic range.
  bool was_constant = false;

  double at(std::size_t row, std::size_t col) const { return pixels[row * shape.width + col]; }
};

GrayImage make_image(const Shape& shape, Vector pixels);

enum class SynthKind { Blobs, Checker, RandomPhantom };

const char* to_string(SynthKind kind);
SynthKind parse_synth_kind(const std::string& name);

struct SynthOptions {
  int blob_components = 3;
  std::size_t checker_block = 4;
  int phantom_smoothing = 2; // radius of the box filter applied to uniform noise
};

/// Deterministic per seed; pixels in [0, 1].
/// Blobs: clipped sum of Gaussian bumps with amplitudes in [0.5, 1].
/// Checker: alternating squares of side checker_block, starting bright at (0, 0).
/// RandomPhantom: box-smoothed uniform noise, rescaled to [0, 1].
std::vector<GrayImage> synthesize_images(std::size_t count, const Shape& shape, SynthKind kind, std::uint64_t seed,
                                         const SynthOptions& options = {});

/// Closed-form blob sum before clipping, exposed for verification.
struct Blob {
  double row, col, width, amplitude;
};
std::vector<Blob> blob_components(const Shape& shape, std::uint64_t image_seed, int components);
double blob_value(const std::vector<Blob>& blobs, const Shape& shape, double row, double col);

/// (x - min) / (max - min); constant images become zeros with was_constant set.
GrayImage normalize(const GrayImage& image);

/// Tiles of side patch_side at the given stride (0 means patch_side), row-major
/// tile order; incomplete edge tiles are dropped.
std::vector<GrayImage> patchify(const GrayImage& image, std::size_t patch_side, std::size_t stride = 0);

struct DegradationConfig {
  int radius = 5;
  double sigma = 1.3;
  bool normalized = true;
  double delta = 0.0;
  std::uint64_t seed = 0;
};

/// K * x + e with e ~ N(0, delta^2 I) drawn from `seed`.
Vector degrade(const GrayImage& image, const DegradationConfig& config);

/// Binary (P5) or ASCII (P2) PGM with maxval up to 65535; pixels scaled to [0, 1].
GrayImage load_pgm(const std::string& path);
GrayImage parse_pgm(const std::string& bytes);
/// Writes P5 (default) or P2, rounding to the nearest level of `maxval`.
void save_pgm(const GrayImage& image, const std::string& path, int maxval = 255, bool ascii = false);
std::string encode_pgm(const GrayImage& image, int maxval = 255, bool ascii = false);

struct DatasetSplit {
  std::vector<GrayImage> train;
  std::vector<GrayImage> test;
  std::uint64_t seed = 0;
};

/// Seeded shuffle, then the first `train_count` go to train and the next `test_count` to test.
DatasetSplit split_dataset(std::vector<GrayImage> images, std::size_t train_count, std::size_t test_count,
                           std::uint64_t seed);

std::vector<Vector> signals_of(const std::vector<GrayImage>& images);

} // namespace stablerec

#endif
