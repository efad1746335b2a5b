#include "stablerec/data.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stablerec {

GrayImage make_image(const Shape& shape, Vector pixels) {
  validate_shape(shape);
  require_size(pixels, shape.size(), "make_image");
  return GrayImage{shape, std::move(pixels), false};
}

const char* to_string(SynthKind kind) {
  switch (kind) {
  case SynthKind::Blobs: return "blobs";
  case SynthKind::Checker: return "checker";
  case SynthKind::RandomPhantom: return "random_phantom";
  }
  return "unknown";
}

SynthKind parse_synth_kind(const std::string& name) {
  for (SynthKind k : {SynthKind::Blobs, SynthKind::Checker, SynthKind::RandomPhantom})
    if (name == to_string(k)) return k;
  throw ParameterError("unknown image kind '" + name + "' (expected blobs, checker or random_phantom)");
}

namespace {

double uniform01(std::mt19937_64& gen) {
  // 53 random bits; independent of the library's distribution implementation.
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Squared distance on the torus.
double wrapped_sq(double a, double b, double period) {
  double d = std::fmod(std::abs(a - b), period);
  d = std::min(d, period - d);
  return d * d;
}

GrayImage checker(const Shape& shape, std::size_t block) {
  Vector px(shape.size());
  for (std::size_t r = 0; r < shape.height; ++r)
    for (std::size_t c = 0; c < shape.width; ++c) px[r * shape.width + c] = ((r / block + c / block) % 2 == 0) ? 1.0 : 0.0;
  return make_image(shape, std::move(px));
}

GrayImage phantom(const Shape& shape, std::uint64_t image_seed, int radius) {
  std::mt19937_64 gen(image_seed);
  Vector noise(shape.size());
  for (double& v : noise) v = uniform01(gen);
  const long h = static_cast<long>(shape.height), w = static_cast<long>(shape.width);
  Vector smooth(shape.size(), 0.0);
  for (long r = 0; r < h; ++r)
    for (long c = 0; c < w; ++c) {
      double s = 0.0;
      for (long dr = -radius; dr <= radius; ++dr)
        for (long dc = -radius; dc <= radius; ++dc) s += noise[static_cast<std::size_t>(((r + dr + h) % h) * w + (c + dc + w) % w)];
      smooth[static_cast<std::size_t>(r * w + c)] = s;
    }
  GrayImage img = normalize(make_image(shape, std::move(smooth)));
  img.was_constant = false;
  return img;
}

} // namespace

std::vector<Blob> blob_components(const Shape& shape, std::uint64_t image_seed, int components) {
  std::mt19937_64 gen(image_seed);
  const double h = static_cast<double>(shape.height), w = static_cast<double>(shape.width);
  const double side = std::min(h, w);
  std::vector<Blob> blobs;
  for (int k = 0; k < components; ++k) {
    Blob b;
    b.row = uniform01(gen) * h;
    b.col = uniform01(gen) * w;
    b.width = side * (0.05 + 0.14 * uniform01(gen));
    b.amplitude = 0.5 + 0.5 * uniform01(gen);
    blobs.push_back(b);
  }
  return blobs;
}

double blob_value(const std::vector<Blob>& blobs, const Shape& shape, double row, double col) {
  double v = 0.0;
  for (const Blob& b : blobs) {
    const double d2 = wrapped_sq(row, b.row, static_cast<double>(shape.height)) +
                      wrapped_sq(col, b.col, static_cast<double>(shape.width));
    v += b.amplitude * std::exp(-d2 / (2.0 * b.width * b.width));
  }
  return v;
}

std::vector<GrayImage> synthesize_images(std::size_t count, const Shape& shape, SynthKind kind, std::uint64_t seed,
                                         const SynthOptions& options) {
  if (count < 1) throw ParameterError("synthesize_images: count must be at least 1");
  validate_shape(shape);
  if (!is_power_of_two(shape.height) || !is_power_of_two(shape.width))
    throw ParameterError("synthesize_images: grid sides must be powers of two");
  if (options.blob_components < 1 || options.checker_block < 1 || options.phantom_smoothing < 0)
    throw ParameterError("synthesize_images: invalid synthesis options");

  std::vector<GrayImage> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t image_seed = derive_seed(seed, i);
    switch (kind) {
    case SynthKind::Blobs: {
      const std::vector<Blob> blobs = blob_components(shape, image_seed, options.blob_components);
      Vector px(shape.size());
      for (std::size_t r = 0; r < shape.height; ++r)
        for (std::size_t c = 0; c < shape.width; ++c)
          px[r * shape.width + c] =
              std::clamp(blob_value(blobs, shape, static_cast<double>(r), static_cast<double>(c)), 0.0, 1.0);
      out.push_back(make_image(shape, std::move(px)));
      break;
    }
    case SynthKind::Checker: out.push_back(checker(shape, options.checker_block)); break;
    case SynthKind::RandomPhantom: out.push_back(phantom(shape, image_seed, options.phantom_smoothing)); break;
    }
  }
  return out;
}

GrayImage normalize(const GrayImage& image) {
  GrayImage out = image;
  if (image.pixels.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(image.pixels.begin(), image.pixels.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(out.pixels.begin(), out.pixels.end(), 0.0);
    out.was_constant = true;
    return out;
  }
  const double range = hi - lo;
  for (double& v : out.pixels) v = (v - lo) / range;
  out.was_constant = false;
  return out;
}

std::vector<GrayImage> patchify(const GrayImage& image, std::size_t patch_side, std::size_t stride) {
  if (patch_side < 1) throw ParameterError("patchify: patch side must be positive");
  if (stride == 0) stride = patch_side;
  if (patch_side > image.shape.height || patch_side > image.shape.width)
    throw ParameterError("patchify: patch larger than the image");
  std::vector<GrayImage> out;
  for (std::size_t r0 = 0; r0 + patch_side <= image.shape.height; r0 += stride)
    for (std::size_t c0 = 0; c0 + patch_side <= image.shape.width; c0 += stride) {
      Vector px(patch_side * patch_side);
      for (std::size_t r = 0; r < patch_side; ++r)
        for (std::size_t c = 0; c < patch_side; ++c) px[r * patch_side + c] = image.at(r0 + r, c0 + c);
      out.push_back(make_image({patch_side, patch_side}, std::move(px)));
    }
  return out;
}

Vector degrade(const GrayImage& image, const DegradationConfig& config) {
  if (config.delta < 0.0) throw ParameterError("degrade: delta must be non-negative");
  const ConvolutionOperator op(image.shape, build_gaussian_kernel(config.radius, config.sigma, config.normalized));
  Vector y = op.apply(image.pixels);
  if (config.delta > 0.0) axpy(1.0, gaussian_vector(y.size(), config.delta, config.seed), y);
  return y;
}

DatasetSplit split_dataset(std::vector<GrayImage> images, std::size_t train_count, std::size_t test_count,
                           std::uint64_t seed) {
  if (train_count + test_count > images.size())
    throw ParameterError("split_dataset: requested " + std::to_string(train_count + test_count) + " images but only " +
                         std::to_string(images.size()) + " are available");
  std::vector<std::size_t> order(images.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 gen(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[gen() % i]);
  DatasetSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < train_count; ++i) split.train.push_back(images[order[i]]);
  for (std::size_t i = train_count; i < train_count + test_count; ++i) split.test.push_back(images[order[i]]);
  return split;
}

std::vector<Vector> signals_of(const std::vector<GrayImage>& images) {
  std::vector<Vector> out;
  out.reserve(images.size());
  for (const GrayImage& img : images) out.push_back(img.pixels);
  return out;
}

} // namespace stablerec
