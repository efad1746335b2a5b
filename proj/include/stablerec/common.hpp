#ifndef STABLEREC_COMMON_HPP
#define STABLEREC_COMMON_HPP

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stablerec {

using Vector = std::vector<double>;
using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid scalar parameter or configuration value.
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Dimension mismatch between operands.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// The requested computation is not supported for this input size or type.
class CapabilityError : public Error {
public:
  using Error::Error;
};

/// Floating-point breakdown (NaN/inf) or a degenerate numerical situation.
class NumericalError : public Error {
public:
  NumericalError(const std::string& what, long index = -1) : Error(what), index_(index) {}
  /// Iteration, epoch or sample index at which the failure happened (-1 if n/a).
  long index() const noexcept { return index_; }

private:
  long index_;
};

class RankDeficiencyError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class DegenerateSpectrumError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class TrainingDivergedError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Malformed input file; `offset` is the byte position where parsing failed.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

class IoError : public Error {
public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Shape
// ---------------------------------------------------------------------------

/// Image grid; signals are stored row-major with n = height * width entries.
struct Shape {
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const noexcept { return height * width; }
  bool operator==(const Shape&) const = default;
};

/// Throws ParameterError unless both sides are >= 1.
void validate_shape(const Shape& shape);

bool is_power_of_two(std::size_t value) noexcept;

// ---------------------------------------------------------------------------
// Dense vector helpers
// ---------------------------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_norm(std::span<const double> a);
/// ||a - b||
double distance(std::span<const double> a, std::span<const double> b);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
Vector add(std::span<const double> a, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> a, double alpha);
bool all_finite(std::span<const double> a) noexcept;

/// Throws ShapeError with `context` when sizes differ.
void require_size(std::span<const double> v, std::size_t expected, const char* context);

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

/// Mixes a base seed with stream indices so that independent draws (per trial,
/// per sample) can be generated in any order with identical results.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// i.i.d. N(0, delta^2) vector from a seeded 64-bit Mersenne twister.
Vector gaussian_vector(std::size_t size, double delta, std::uint64_t seed);
/// Shortest round-trip text for CSV/JSON reports; identical inputs
/// Fixed-format number for CSV/JSON reports ("%.17g"); identical inputs
/// always produce identical text.
std::string format_number(double value);

} // namespace stablerec

#endif
