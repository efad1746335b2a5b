#ifndef STABLEREC_RECONSTRUCT_HPP
#define STABLEREC_RECONSTRUCT_HPP

#include "stablerec/linops.hpp"

#include "json.hpp"

#include <iosfwd>
#include <memory>
#include <vector>

namespace stablerec {

enum class ReconstructorKind { PseudoInverse, Tikhonov, Stabilizer, Composed, Constant, Learned, Linear };

const char* to_string(ReconstructorKind kind);

/// A deterministic map from data space (input_dim) to signal space (output_dim).
class Reconstructor {
public:
  virtual ~Reconstructor() = default;

  /// Throws ShapeError if length(y) != input_dim().
  Vector reconstruct(std::span<const double> y) const;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual ReconstructorKind kind() const = 0;
  /// {kind, lambda, k, tolerances, model_path} as applicable.
  virtual nlohmann::json describe() const;

protected:
  virtual Vector evaluate(std::span<const double> y) const = 0;
};

using ReconstructorPtr = std::shared_ptr<const Reconstructor>;

// ---------------------------------------------------------------------------
// CGLS
// ---------------------------------------------------------------------------

struct TikhonovConfig {
  double lambda = 1e-2;
  OperatorPtr regularizer; // null means the identity
  double tol_f = 1e-6;
  double tol_x = 1e-6;
  int max_iters = 1000;
};

/// Throws ParameterError for negative lambda, non-positive tolerances or iteration cap.
void validate(const TikhonovConfig& config);

enum class StopReason { ResidualTol, StepTol, MaxIters };

const char* to_string(StopReason reason);

struct CglsTrace {
  std::vector<Vector> iterates;       // x^(1), x^(2), ... (only when recorded)
  Vector residual_norms;              // ||[y; 0] - [A; sqrt(lambda) L] x^(k)||, k = 1..K
  Vector normal_residual_norms;       // ||A^T y - (A^T A + lambda L^T L) x^(k)||
  StopReason stop_reason = StopReason::MaxIters;
  int iterations = 0;                 // K
};

struct CglsOptions {
  double tol_f = 1e-6;
  double tol_x = 1e-6;
  int max_iters = 1000;
  /// When positive, run exactly this many steps and ignore both tolerances.
  int fixed_iterations = 0;
  bool record_iterates = false;
};

struct CglsResult {
  Vector x;
  CglsTrace trace;
};

/// CGLS on the stacked system [A; sqrt(lambda) L] x = [y; 0] from x = 0.
/// After each update k >= 1 it stops when ||y - A x||^2 < tol_f or
/// ||x^(k) - x^(k-1)||^2 < tol_x. A null regularizer means the identity.
CglsResult cgls(const LinearOperator& op, const LinearOperator* regularizer, double lambda, std::span<const double> y,
                const CglsOptions& options);

CglsResult cgls(const LinearOperator& op, const TikhonovConfig& config, std::span<const double> y,
                bool record_iterates = false);

/// Writes "iteration,residual_norm" rows.
void write_trace_csv(const CglsTrace& trace, std::ostream& out);

/// Smallest singular value of the stacked dense operator [A; L]; requires
/// a dense-capable size. Throws RankDeficiencyError if it is <= 1e-12.
double check_kernel_condition(const LinearOperator& op, const LinearOperator& regularizer);

// ---------------------------------------------------------------------------
// Reconstructors
// ---------------------------------------------------------------------------

class PseudoInverse final : public Reconstructor {
public:
  PseudoInverse(OperatorPtr op, double truncation_threshold = 0.0);

  std::size_t input_dim() const override { return op_->rows(); }
  std::size_t output_dim() const override { return op_->cols(); }
  ReconstructorKind kind() const override { return ReconstructorKind::PseudoInverse; }
  nlohmann::json describe() const override;

protected:
  Vector evaluate(std::span<const double> y) const override;

private:
  OperatorPtr op_;
  double threshold_;
  // Circulant path: per-frequency inverse gains (zero where truncated).
  ComplexVector inverse_gains_;
  // Dense path.
  Vector sigma_;
  DenseMatrix v_;
  DenseMatrix u_;
};

std::shared_ptr<PseudoInverse> pseudo_inverse(OperatorPtr op, double truncation_threshold = 0.0);

/// Psi^{lambda,L}: CGLS run to the configured tolerances.
class Tikhonov final : public Reconstructor {
public:
  Tikhonov(OperatorPtr op, TikhonovConfig config);

  std::size_t input_dim() const override { return op_->rows(); }
  std::size_t output_dim() const override { return op_->cols(); }
  ReconstructorKind kind() const override { return ReconstructorKind::Tikhonov; }
  nlohmann::json describe() const override;

  const TikhonovConfig& config() const noexcept { return config_; }
  CglsResult solve(std::span<const double> y, bool record_iterates = false) const;

protected:
  Vector evaluate(std::span<const double> y) const override;

private:
  OperatorPtr op_;
  TikhonovConfig config_;
};

std::shared_ptr<Tikhonov> tikhonov(OperatorPtr op, TikhonovConfig config);

struct StabilizerSpec {
  int k = 3;
  TikhonovConfig tikhonov;
};

/// phi_k: exactly k CGLS steps from zero, no early stop.
class Stabilizer final : public Reconstructor {
public:
  Stabilizer(OperatorPtr op, StabilizerSpec spec);

  std::size_t input_dim() const override { return op_->rows(); }
  std::size_t output_dim() const override { return op_->cols(); }
  ReconstructorKind kind() const override { return ReconstructorKind::Stabilizer; }
  nlohmann::json describe() const override;

  const StabilizerSpec& spec() const noexcept { return spec_; }

protected:
  Vector evaluate(std::span<const double> y) const override;

private:
  OperatorPtr op_;
  StabilizerSpec spec_;
};

std::shared_ptr<Stabilizer> stabilizer(OperatorPtr op, StabilizerSpec spec);

/// gamma ∘ phi.
class Composed final : public Reconstructor {
public:
  Composed(ReconstructorPtr gamma, ReconstructorPtr phi);

  std::size_t input_dim() const override { return phi_->input_dim(); }
  std::size_t output_dim() const override { return gamma_->output_dim(); }
  ReconstructorKind kind() const override { return ReconstructorKind::Composed; }
  nlohmann::json describe() const override;

  const ReconstructorPtr& gamma() const noexcept { return gamma_; }
  const ReconstructorPtr& phi() const noexcept { return phi_; }

protected:
  Vector evaluate(std::span<const double> y) const override;

private:
  ReconstructorPtr gamma_;
  ReconstructorPtr phi_;
};

std::shared_ptr<Composed> compose(ReconstructorPtr gamma, ReconstructorPtr phi);

/// Always returns the mean of its samples.
class Constant final : public Reconstructor {
public:
  Constant(std::span<const Vector> samples, std::size_t input_dim);

  std::size_t input_dim() const override { return input_dim_; }
  std::size_t output_dim() const override { return mean_.size(); }
  ReconstructorKind kind() const override { return ReconstructorKind::Constant; }

  const Vector& value() const noexcept { return mean_; }

protected:
  Vector evaluate(std::span<const double>) const override { return mean_; }

private:
  Vector mean_;
  std::size_t input_dim_;
};

/// `input_dim` defaults to the sample dimension.
std::shared_ptr<Constant> constant_reconstructor(std::span<const Vector> samples, std::size_t input_dim = 0);

/// Applies a fixed linear operator (e.g. the identity map).
class LinearReconstructor final : public Reconstructor {
public:
  explicit LinearReconstructor(OperatorPtr map);

  std::size_t input_dim() const override { return map_->cols(); }
  std::size_t output_dim() const override { return map_->rows(); }
  ReconstructorKind kind() const override { return ReconstructorKind::Linear; }

protected:
  Vector evaluate(std::span<const double> y) const override { return map_->apply(y); }

private:
  OperatorPtr map_;
};

std::shared_ptr<LinearReconstructor> identity_reconstructor(std::size_t n);

} // namespace stablerec

#endif
