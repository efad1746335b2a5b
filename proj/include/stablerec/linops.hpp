#ifndef STABLEREC_LINOPS_HPP
#define STABLEREC_LINOPS_HPP

#include "stablerec/common.hpp"
#include "stablerec/fft.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

namespace stablerec {

// ---------------------------------------------------------------------------
// Dense matrices
// ---------------------------------------------------------------------------

/// Row-major dense matrix.
class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, Vector entries);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const Vector& data() const noexcept { return data_; }

  Vector column(std::size_t c) const;
  DenseMatrix transpose() const;
  Vector multiply(std::span<const double> x) const;
  Vector multiply_transpose(std::span<const double> y) const;
  DenseMatrix multiply(const DenseMatrix& other) const;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

/// Kronecker product a ⊗ b.
DenseMatrix kronecker(const DenseMatrix& a, const DenseMatrix& b);

/// Solves a square system by Gaussian elimination with partial pivoting.
Vector solve_dense(DenseMatrix a, Vector b);

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Diagonalization of a circulant operator on a periodic grid.
struct CirculantSymbol {
  Shape shape;
  ComplexVector eigenvalues; // fft2 of the embedded kernel
};

class LinearOperator {
public:
  virtual ~LinearOperator() = default;

  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  virtual std::string type_name() const = 0;

  /// Throws ShapeError if length(x) != cols().
  Vector apply(std::span<const double> x) const;
  /// Throws ShapeError if length(y) != rows().
  Vector apply_adjoint(std::span<const double> y) const;

  /// Non-null for circulant operators.
  virtual const CirculantSymbol* circulant() const { return nullptr; }
  virtual bool is_identity() const { return false; }

protected:
  virtual Vector apply_unchecked(std::span<const double> x) const = 0;
  virtual Vector apply_adjoint_unchecked(std::span<const double> y) const = 0;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

class DenseOperator final : public LinearOperator {
public:
  explicit DenseOperator(DenseMatrix matrix);

  std::size_t rows() const override { return matrix_.rows(); }
  std::size_t cols() const override { return matrix_.cols(); }
  std::string type_name() const override { return "dense"; }
  const DenseMatrix& matrix() const noexcept { return matrix_; }

protected:
  Vector apply_unchecked(std::span<const double> x) const override;
  Vector apply_adjoint_unchecked(std::span<const double> y) const override;

private:
  DenseMatrix matrix_;
};

class IdentityOperator final : public LinearOperator {
public:
  explicit IdentityOperator(std::size_t n);

  std::size_t rows() const override { return n_; }
  std::size_t cols() const override { return n_; }
  std::string type_name() const override { return "identity"; }
  bool is_identity() const override { return true; }

protected:
  Vector apply_unchecked(std::span<const double> x) const override;
  Vector apply_adjoint_unchecked(std::span<const double> y) const override;

private:
  std::size_t n_;
};

/// Square stencil of side 2*radius+1; weight(i, j) for |i|,|j| <= radius.
class ConvolutionKernel {
public:
  ConvolutionKernel(int radius, Vector weights);
  virtual ~ConvolutionKernel() = default;

  int radius() const noexcept { return radius_; }
  std::size_t side() const noexcept { return static_cast<std::size_t>(2 * radius_ + 1); }
  double weight(int i, int j) const;
  const Vector& weights() const noexcept { return weights_; }
  double sum() const;

private:
  int radius_;
  Vector weights_;
};

class GaussianKernel final : public ConvolutionKernel {
public:
  GaussianKernel(int radius, double sigma, bool normalized);
  double sigma() const noexcept { return sigma_; }
  bool normalized() const noexcept { return normalized_; }

private:
  double sigma_;
  bool normalized_;
};

GaussianKernel build_gaussian_kernel(int radius = 5, double sigma = 1.3, bool normalized = true);

/// Outer product of [1, -2, 1] with itself: the periodic analogue of D ⊗ D.
ConvolutionKernel second_difference_stencil();

/// Periodic convolution diagonalized by the 2D DFT.
class ConvolutionOperator final : public LinearOperator {
public:
  ConvolutionOperator(const Shape& shape, const ConvolutionKernel& kernel);

  std::size_t rows() const override { return symbol_.shape.size(); }
  std::size_t cols() const override { return symbol_.shape.size(); }
  std::string type_name() const override { return "convolution"; }
  const CirculantSymbol* circulant() const override { return &symbol_; }

  const Shape& shape() const noexcept { return symbol_.shape; }
  const ComplexVector& eigenvalues() const noexcept { return symbol_.eigenvalues; }
  const ConvolutionKernel& kernel() const noexcept { return kernel_; }

protected:
  Vector apply_unchecked(std::span<const double> x) const override;
  Vector apply_adjoint_unchecked(std::span<const double> y) const override;

private:
  ConvolutionKernel kernel_;
  CirculantSymbol symbol_;
};

std::shared_ptr<ConvolutionOperator> build_convolution_operator(const Shape& shape, const ConvolutionKernel& kernel);

/// Tridiagonal D (-2 on the diagonal, 1 off it) in 1D, or D_h ⊗ D_w on a grid.
class GradientOperator final : public LinearOperator {
public:
  explicit GradientOperator(std::size_t size_1d);
  explicit GradientOperator(const Shape& shape);

  std::size_t rows() const override { return shape_.size(); }
  std::size_t cols() const override { return shape_.size(); }
  std::string type_name() const override { return "gradient"; }

  const Shape& shape() const noexcept { return shape_; }
  bool is_1d() const noexcept { return one_d_; }
  static DenseMatrix dense_d(std::size_t size);

protected:
  Vector apply_unchecked(std::span<const double> x) const override;
  Vector apply_adjoint_unchecked(std::span<const double> y) const override { return apply_unchecked(y); }

private:
  Shape shape_;
  bool one_d_;
};

/// Dense matrix with the operator's action, column by column.
DenseMatrix materialize(const LinearOperator& op);

// ---------------------------------------------------------------------------
// Spectral decomposition
// ---------------------------------------------------------------------------

class SpectralDecomposition {
public:
  /// Dense path: thin SVD with U (m x n), V (n x n), singular values descending.
  SpectralDecomposition(DenseMatrix u, Vector sigma, DenseMatrix v);
  /// Circulant path: vectors are synthesized from Fourier modes on demand.
  explicit SpectralDecomposition(const CirculantSymbol& symbol);

  const Vector& singular_values() const noexcept { return sigma_; }
  std::size_t size() const noexcept { return sigma_.size(); }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_circulant() const noexcept { return circulant_; }

  /// 0-based: v_{i+1} and u_{i+1} in one-based numbering.
  Vector right_vector(std::size_t i) const;
  Vector left_vector(std::size_t i) const;

private:
  struct Mode {
    std::size_t frequency;
    int part; // 0 = self-conjugate real mode, 1 = cosine, 2 = sine
  };

  Vector mode_vector(const Mode& mode) const;

  bool circulant_ = false;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector sigma_;
  DenseMatrix u_;
  DenseMatrix v_;
  Shape shape_;
  ComplexVector eigenvalues_;
  std::vector<Mode> modes_;
};

/// Largest dimension accepted by the dense (Jacobi) path.
inline constexpr std::size_t kMaxDenseSvdDim = 4096;

SpectralDecomposition spectral_decomposition(const LinearOperator& op);

/// Unit vector in span{v_{t+1}, ..., v_n} (one-based t), random coefficients.
Vector trailing_subspace_vector(const SpectralDecomposition& spec, std::size_t t, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Kernel text format and operator descriptors
// ---------------------------------------------------------------------------

/// One row per line, whitespace separated.
void write_kernel_text(const ConvolutionKernel& kernel, std::ostream& out);
ConvolutionKernel read_kernel_text(std::istream& in);

struct OperatorDescriptor {
  std::string type = "convolution"; // convolution | identity | gradient | periodic_gradient
  Shape shape{32, 32};
  int radius = 5;
  double sigma = 1.3;
  bool normalized = true;
};

OperatorPtr build_operator(const OperatorDescriptor& desc);

} // namespace stablerec

#endif
