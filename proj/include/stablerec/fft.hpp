#ifndef STABLEREC_FFT_HPP
#define STABLEREC_FFT_HPP

#include "stablerec/common.hpp"

#include <span>
#include <vector>

namespace stablerec {

using ComplexVector = std::vector<Complex>;

/// In-place radix-2 transform; length must be a power of two.
/// `inverse` uses the positive exponent and divides by the length.
void fft_inplace(std::span<Complex> data, bool inverse);

/// Row-major 2D transforms over `shape`; both sides must be powers of two.
ComplexVector fft2(std::span<const double> real_input, const Shape& shape);
ComplexVector fft2(std::span<const Complex> input, const Shape& shape);
ComplexVector ifft2(std::span<const Complex> input, const Shape& shape);
/// Real part of ifft2.
Vector ifft2_real(std::span<const Complex> input, const Shape& shape);

/// Throws CapabilityError when a side is not a power of two.
void require_fft_shape(const Shape& shape);

/// Flat index of the frequency (-u, -v) mod shape.
std::size_t mirror_index(std::size_t index, const Shape& shape);

} // namespace stablerec

#endif
