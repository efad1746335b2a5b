#include "stablerec/fft.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace stablerec {

void require_fft_shape(const Shape& shape) {
  validate_shape(shape);
  if (!is_power_of_two(shape.height) || !is_power_of_two(shape.width)) {
    throw CapabilityError("FFT requires power-of-two grid sides, got " + std::to_string(shape.height) + "x" +
                          std::to_string(shape.width));
  }
}

void fft_inplace(std::span<Complex> data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw CapabilityError("FFT length must be a power of two");
  if (n == 1) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    // Twiddles computed directly (not by recurrence) to keep round-off at the
    // level of a single sin/cos evaluation.
    for (std::size_t k = 0; k < half; ++k) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      const Complex w(std::cos(angle), std::sin(angle));
      for (std::size_t start = 0; start < n; start += len) {
        const Complex u = data[start + k];
        const Complex v = data[start + k + half] * w;
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (Complex& c : data) c *= scale;
  }
}

namespace {

void transform2(ComplexVector& data, const Shape& shape, bool inverse) {
  const std::size_t h = shape.height, w = shape.width;
  for (std::size_t r = 0; r < h; ++r) fft_inplace(std::span<Complex>(data.data() + r * w, w), inverse);
  ComplexVector column(h);
  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) column[r] = data[r * w + c];
    fft_inplace(column, inverse);
    for (std::size_t r = 0; r < h; ++r) data[r * w + c] = column[r];
  }
}

} // namespace

ComplexVector fft2(std::span<const double> real_input, const Shape& shape) {
  require_fft_shape(shape);
  require_size(real_input, shape.size(), "fft2");
  ComplexVector data(real_input.begin(), real_input.end());
  transform2(data, shape, false);
  return data;
}

ComplexVector fft2(std::span<const Complex> input, const Shape& shape) {
  require_fft_shape(shape);
  if (input.size() != shape.size()) throw ShapeError("fft2: size mismatch");
  ComplexVector data(input.begin(), input.end());
  transform2(data, shape, false);
  return data;
}

ComplexVector ifft2(std::span<const Complex> input, const Shape& shape) {
  require_fft_shape(shape);
  if (input.size() != shape.size()) throw ShapeError("ifft2: size mismatch");
  ComplexVector data(input.begin(), input.end());
  transform2(data, shape, true);
  return data;
}

Vector ifft2_real(std::span<const Complex> input, const Shape& shape) {
  const ComplexVector full = ifft2(input, shape);
  Vector out(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) out[i] = full[i].real();
  return out;
}

std::size_t mirror_index(std::size_t index, const Shape& shape) {
  const std::size_t r = index / shape.width, c = index % shape.width;
  const std::size_t mr = (shape.height - r) % shape.height;
  const std::size_t mc = (shape.width - c) % shape.width;
  return mr * shape.width + mc;
}

} // namespace stablerec
