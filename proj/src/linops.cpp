#include "stablerec/linops.hpp"

#include "stablerec/svd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace stablerec {

// ---------------------------------------------------------------------------
// DenseMatrix
// ---------------------------------------------------------------------------

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, Vector entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) throw ShapeError("DenseMatrix: entry count does not match rows*cols");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Vector DenseMatrix::column(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Vector DenseMatrix::multiply(std::span<const double> x) const {
  require_size(x, cols_, "DenseMatrix::multiply");
  Vector out(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* row = data_.data() + r * cols_;
    double s = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) s += row[c] * x[c];
    out[r] = s;
  }
  return out;
}

Vector DenseMatrix::multiply_transpose(std::span<const double> y) const {
  require_size(y, rows_, "DenseMatrix::multiply_transpose");
  Vector out(cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* row = data_.data() + r * cols_;
    for (std::size_t c = 0; c < cols_; ++c) out[c] += row[c] * y[r];
  }
  return out;
}

DenseMatrix DenseMatrix::multiply(const DenseMatrix& other) const {
  if (cols_ != other.rows_) throw ShapeError("DenseMatrix::multiply: inner dimensions differ");
  DenseMatrix out(rows_, other.cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(r, k);
      if (a == 0.0) continue;
      for (std::size_t c = 0; c < other.cols_; ++c) out(r, c) += a * other(k, c);
    }
  return out;
}

DenseMatrix kronecker(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

Vector solve_dense(DenseMatrix a, Vector b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeError("solve_dense: matrix must be square");
  require_size(b, n, "solve_dense");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (a(pivot, col) == 0.0) throw RankDeficiencyError("solve_dense: singular matrix", static_cast<long>(col));
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
    x[i] = s / a(i, i);
  }
  return x;
}

// ---------------------------------------------------------------------------
// LinearOperator
// ---------------------------------------------------------------------------

Vector LinearOperator::apply(std::span<const double> x) const {
  require_size(x, cols(), "apply");
  return apply_unchecked(x);
}

Vector LinearOperator::apply_adjoint(std::span<const double> y) const {
  require_size(y, rows(), "apply_adjoint");
  return apply_adjoint_unchecked(y);
}

DenseOperator::DenseOperator(DenseMatrix matrix) : matrix_(std::move(matrix)) {}

Vector DenseOperator::apply_unchecked(std::span<const double> x) const { return matrix_.multiply(x); }

Vector DenseOperator::apply_adjoint_unchecked(std::span<const double> y) const {
  return matrix_.multiply_transpose(y);
}

IdentityOperator::IdentityOperator(std::size_t n) : n_(n) {
  if (n == 0) throw ParameterError("IdentityOperator: dimension must be positive");
}

Vector IdentityOperator::apply_unchecked(std::span<const double> x) const { return Vector(x.begin(), x.end()); }

Vector IdentityOperator::apply_adjoint_unchecked(std::span<const double> y) const {
  return Vector(y.begin(), y.end());
}

// ---------------------------------------------------------------------------
// Kernels and convolution
// ---------------------------------------------------------------------------

ConvolutionKernel::ConvolutionKernel(int radius, Vector weights) : radius_(radius), weights_(std::move(weights)) {
  if (radius < 0) throw ParameterError("kernel radius must be non-negative");
  if (weights_.size() != side() * side()) throw ShapeError("kernel weight count must be (2*radius+1)^2");
}

double ConvolutionKernel::weight(int i, int j) const {
  if (std::abs(i) > radius_ || std::abs(j) > radius_) return 0.0;
  return weights_[static_cast<std::size_t>(i + radius_) * side() + static_cast<std::size_t>(j + radius_)];
}

double ConvolutionKernel::sum() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

namespace {

Vector gaussian_weights(int radius, double sigma, bool normalized) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("Gaussian kernel sigma must be positive");
  if (radius < 0) throw ParameterError("kernel radius must be non-negative");
  const std::size_t side = static_cast<std::size_t>(2 * radius + 1);
  Vector w(side * side);
  for (int i = -radius; i <= radius; ++i)
    for (int j = -radius; j <= radius; ++j)
      w[static_cast<std::size_t>(i + radius) * side + static_cast<std::size_t>(j + radius)] =
          std::exp(-static_cast<double>(i * i + j * j) / (2.0 * sigma * sigma));
  if (normalized) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= total;
  }
  return w;
}

} // namespace

GaussianKernel::GaussianKernel(int radius, double sigma, bool normalized)
    : ConvolutionKernel(radius, gaussian_weights(radius, sigma, normalized)), sigma_(sigma),
      normalized_(normalized) {}

GaussianKernel build_gaussian_kernel(int radius, double sigma, bool normalized) {
  return GaussianKernel(radius, sigma, normalized);
}

ConvolutionKernel second_difference_stencil() {
  const double d[3] = {1.0, -2.0, 1.0};
  Vector w(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) w[static_cast<std::size_t>(i * 3 + j)] = d[i] * d[j];
  return ConvolutionKernel(1, std::move(w));
}

ConvolutionOperator::ConvolutionOperator(const Shape& shape, const ConvolutionKernel& kernel) : kernel_(kernel) {
  validate_shape(shape);
  if (kernel.side() > std::min(shape.height, shape.width)) {
    throw ParameterError("kernel of side " + std::to_string(kernel.side()) + " does not fit a " +
                         std::to_string(shape.height) + "x" + std::to_string(shape.width) + " grid");
  }
  require_fft_shape(shape);
  Vector embedded(shape.size(), 0.0);
  const int r = kernel.radius();
  const auto h = static_cast<long>(shape.height), w = static_cast<long>(shape.width);
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) {
      const long row = ((i % h) + h) % h, col = ((j % w) + w) % w;
      embedded[static_cast<std::size_t>(row * w + col)] += kernel.weight(i, j);
    }
  symbol_.shape = shape;
  symbol_.eigenvalues = fft2(embedded, shape);
}

Vector ConvolutionOperator::apply_unchecked(std::span<const double> x) const {
  ComplexVector spectrum = fft2(x, symbol_.shape);
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= symbol_.eigenvalues[i];
  return ifft2_real(spectrum, symbol_.shape);
}

Vector ConvolutionOperator::apply_adjoint_unchecked(std::span<const double> y) const {
  ComplexVector spectrum = fft2(y, symbol_.shape);
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= std::conj(symbol_.eigenvalues[i]);
  return ifft2_real(spectrum, symbol_.shape);
}

std::shared_ptr<ConvolutionOperator> build_convolution_operator(const Shape& shape, const ConvolutionKernel& kernel) {
  return std::make_shared<ConvolutionOperator>(shape, kernel);
}

// ---------------------------------------------------------------------------
// Gradient
// ---------------------------------------------------------------------------

GradientOperator::GradientOperator(std::size_t size_1d) : shape_{1, size_1d}, one_d_(true) {
  if (size_1d == 0) throw ParameterError("GradientOperator: size must be positive");
}

GradientOperator::GradientOperator(const Shape& shape) : shape_(shape), one_d_(false) { validate_shape(shape); }

DenseMatrix GradientOperator::dense_d(std::size_t size) {
  DenseMatrix d(size, size);
  for (std::size_t i = 0; i < size; ++i) {
    d(i, i) = -2.0;
    if (i > 0) d(i, i - 1) = 1.0;
    if (i + 1 < size) d(i, i + 1) = 1.0;
  }
  return d;
}

namespace {

// out[k*stride] = D applied along a line of `len` entries starting at `base`.
void apply_d_line(const double* in, double* out, std::size_t len, std::size_t stride) {
  for (std::size_t k = 0; k < len; ++k) {
    double s = -2.0 * in[k * stride];
    if (k > 0) s += in[(k - 1) * stride];
    if (k + 1 < len) s += in[(k + 1) * stride];
    out[k * stride] = s;
  }
}

} // namespace

Vector GradientOperator::apply_unchecked(std::span<const double> x) const {
  const std::size_t h = shape_.height, w = shape_.width;
  Vector out(x.size());
  if (one_d_) {
    apply_d_line(x.data(), out.data(), w, 1);
    return out;
  }
  // (D_h ⊗ D_w) vec(X) = vec(D_h X D_w) for row-major X.
  Vector tmp(x.size());
  for (std::size_t r = 0; r < h; ++r) apply_d_line(x.data() + r * w, tmp.data() + r * w, w, 1);
  for (std::size_t c = 0; c < w; ++c) apply_d_line(tmp.data() + c, out.data() + c, h, w);
  return out;
}

DenseMatrix materialize(const LinearOperator& op) {
  const std::size_t m = op.rows(), n = op.cols();
  DenseMatrix out(m, n);
  Vector e(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    e[c] = 1.0;
    const Vector col = op.apply(e);
    e[c] = 0.0;
    for (std::size_t r = 0; r < m; ++r) out(r, c) = col[r];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectral decomposition
// ---------------------------------------------------------------------------

SpectralDecomposition::SpectralDecomposition(DenseMatrix u, Vector sigma, DenseMatrix v)
    : circulant_(false), rows_(u.rows()), cols_(v.rows()), sigma_(std::move(sigma)), u_(std::move(u)),
      v_(std::move(v)) {}

SpectralDecomposition::SpectralDecomposition(const CirculantSymbol& symbol)
    : circulant_(true), rows_(symbol.shape.size()), cols_(symbol.shape.size()), shape_(symbol.shape),
      eigenvalues_(symbol.eigenvalues) {
  const std::size_t n = shape_.size();
  modes_.reserve(n);
  for (std::size_t f = 0; f < n; ++f) {
    const std::size_t mf = mirror_index(f, shape_);
    if (mf == f) {
      modes_.push_back({f, 0});
    } else if (f < mf) {
      modes_.push_back({f, 1});
      modes_.push_back({f, 2});
    }
  }
  std::stable_sort(modes_.begin(), modes_.end(), [&](const Mode& a, const Mode& b) {
    return std::abs(eigenvalues_[a.frequency]) > std::abs(eigenvalues_[b.frequency]);
  });
  sigma_.resize(n);
  for (std::size_t i = 0; i < n; ++i) sigma_[i] = std::abs(eigenvalues_[modes_[i].frequency]);
}

Vector SpectralDecomposition::mode_vector(const Mode& mode) const {
  const std::size_t h = shape_.height, w = shape_.width, n = shape_.size();
  const std::size_t fu = mode.frequency / w, fv = mode.frequency % w;
  const double scale = mode.part == 0 ? 1.0 / std::sqrt(static_cast<double>(n)) : std::sqrt(2.0 / static_cast<double>(n));
  Vector out(n);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      // Reduce the phase modulo the grid before scaling to keep the angle exact.
      const double phase = static_cast<double>((fu * r) % h) / static_cast<double>(h) +
                           static_cast<double>((fv * c) % w) / static_cast<double>(w);
      const double theta = 2.0 * std::numbers::pi * phase;
      out[r * w + c] = scale * (mode.part == 2 ? std::sin(theta) : std::cos(theta));
    }
  return out;
}

Vector SpectralDecomposition::right_vector(std::size_t i) const {
  if (i >= sigma_.size()) throw ParameterError("right_vector: index out of range");
  if (!circulant_) return v_.column(i);
  return mode_vector(modes_[i]);
}

Vector SpectralDecomposition::left_vector(std::size_t i) const {
  if (i >= sigma_.size()) throw ParameterError("left_vector: index out of range");
  if (!circulant_) return u_.column(i);
  const Mode& mode = modes_[i];
  const Complex lambda = eigenvalues_[mode.frequency];
  if (mode.part == 0) {
    Vector v = mode_vector(mode);
    if (lambda.real() < 0.0) {
      for (double& x : v) x = -x;
    }
    return v;
  }
  const double phi = std::arg(lambda);
  const Vector c = mode_vector({mode.frequency, 1});
  const Vector s = mode_vector({mode.frequency, 2});
  Vector out(c.size());
  const double cp = std::cos(phi), sp = std::sin(phi);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = mode.part == 1 ? cp * c[k] - sp * s[k] : sp * c[k] + cp * s[k];
  return out;
}

SpectralDecomposition spectral_decomposition(const LinearOperator& op) {
  if (const CirculantSymbol* symbol = op.circulant()) return SpectralDecomposition(*symbol);
  if (op.rows() > kMaxDenseSvdDim || op.cols() > kMaxDenseSvdDim) {
    throw CapabilityError("dense spectral decomposition is limited to " + std::to_string(kMaxDenseSvdDim) +
                          " rows and columns");
  }
  SvdResult svd = jacobi_svd(materialize(op));
  return SpectralDecomposition(std::move(svd.u), std::move(svd.sigma), std::move(svd.v));
}

Vector trailing_subspace_vector(const SpectralDecomposition& spec, std::size_t t, std::uint64_t seed) {
  const std::size_t n = spec.size();
  if (t < 1 || t >= n) {
    throw ParameterError("trailing_subspace_vector: need 1 <= t < n (t=" + std::to_string(t) +
                         ", n=" + std::to_string(n) + ")");
  }
  const Vector coeffs = gaussian_vector(n - t, 1.0, seed);
  Vector out(spec.cols(), 0.0);
  for (std::size_t i = t; i < n; ++i) axpy(coeffs[i - t], spec.right_vector(i), out);
  const double len = norm(out);
  if (len == 0.0) throw NumericalError("trailing_subspace_vector: zero combination");
  for (double& v : out) v /= len;
  return out;
}

// ---------------------------------------------------------------------------
// Kernel text format
// ---------------------------------------------------------------------------

void write_kernel_text(const ConvolutionKernel& kernel, std::ostream& out) {
  const std::size_t side = kernel.side();
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      if (c) out << ' ';
      out << format_number(kernel.weights()[r * side + c]);
    }
    out << '\n';
  }
}

ConvolutionKernel read_kernel_text(std::istream& in) {
  std::vector<Vector> rows;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    Vector row;
    const char* p = line.c_str();
    while (true) {
      while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
      if (*p == '\0') break;
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw ParseError("kernel text: expected a number", line_start + static_cast<std::size_t>(p - line.c_str()));
      row.push_back(v);
      p = end;
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("kernel text: ragged row", line_start);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("kernel text: no rows", offset);
  const std::size_t side = rows.size();
  if (rows.front().size() != side || side % 2 == 0)
    throw ParseError("kernel text: kernel must be square with odd side", offset);
  Vector weights;
  weights.reserve(side * side);
  for (const Vector& r : rows) weights.insert(weights.end(), r.begin(), r.end());
  return ConvolutionKernel(static_cast<int>(side / 2), std::move(weights));
}

OperatorPtr build_operator(const OperatorDescriptor& desc) {
  validate_shape(desc.shape);
  if (desc.type == "convolution") {
    return build_convolution_operator(desc.shape, build_gaussian_kernel(desc.radius, desc.sigma, desc.normalized));
  }
  if (desc.type == "identity") return std::make_shared<IdentityOperator>(desc.shape.size());
  if (desc.type == "gradient") return std::make_shared<GradientOperator>(desc.shape);
  if (desc.type == "periodic_gradient") return build_convolution_operator(desc.shape, second_difference_stencil());
  throw ParameterError("unknown operator type '" + desc.type + "'");
}

} // namespace stablerec
