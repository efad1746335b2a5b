#include "stablerec/reconstruct.hpp"

#include "stablerec/svd.hpp"

#include <cmath>
#include <ostream>

namespace stablerec {

const char* to_string(ReconstructorKind kind) {
  switch (kind) {
  case ReconstructorKind::PseudoInverse: return "PseudoInverse";
  case ReconstructorKind::Tikhonov: return "Tikhonov";
  case ReconstructorKind::Stabilizer: return "Stabilizer";
  case ReconstructorKind::Composed: return "Composed";
  case ReconstructorKind::Constant: return "Constant";
  case ReconstructorKind::Learned: return "Learned";
  case ReconstructorKind::Linear: return "Linear";
  }
  return "Unknown";
}

const char* to_string(StopReason reason) {
  switch (reason) {
  case StopReason::ResidualTol: return "ResidualTol";
  case StopReason::StepTol: return "StepTol";
  case StopReason::MaxIters: return "MaxIters";
  }
  return "Unknown";
}

Vector Reconstructor::reconstruct(std::span<const double> y) const {
  require_size(y, input_dim(), "reconstruct");
  return evaluate(y);
}

nlohmann::json Reconstructor::describe() const { return {{"kind", to_string(kind())}}; }

void validate(const TikhonovConfig& config) {
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) throw ParameterError("lambda must be non-negative");
  if (!(config.tol_f > 0.0) || !(config.tol_x > 0.0)) throw ParameterError("CGLS tolerances must be positive");
  if (config.max_iters < 1) throw ParameterError("max_iters must be positive");
}

namespace {

nlohmann::json tikhonov_json(const TikhonovConfig& c) {
  return {{"lambda", c.lambda},
          {"regularizer", c.regularizer ? c.regularizer->type_name() : std::string("identity")},
          {"tolerances", {{"tol_f", c.tol_f}, {"tol_x", c.tol_x}}},
          {"max_iters", c.max_iters}};
}

} // namespace

// ---------------------------------------------------------------------------
// CGLS
// ---------------------------------------------------------------------------

CglsResult cgls(const LinearOperator& op, const LinearOperator* regularizer, double lambda, std::span<const double> y,
                const CglsOptions& options) {
  require_size(y, op.rows(), "cgls data");
  if (!(lambda >= 0.0)) throw ParameterError("cgls: lambda must be non-negative");
  if (regularizer && regularizer->cols() != op.cols())
    throw ShapeError("cgls: regularizer columns must match operator columns");
  if (options.fixed_iterations <= 0 && options.max_iters < 1) throw ParameterError("cgls: max_iters must be positive");

  const std::size_t n = op.cols();
  const double root = std::sqrt(lambda);
  const bool use_reg = lambda > 0.0;
  auto apply_l = [&](std::span<const double> v) { return regularizer ? regularizer->apply(v) : Vector(v.begin(), v.end()); };
  auto apply_lt = [&](std::span<const double> v) {
    return regularizer ? regularizer->apply_adjoint(v) : Vector(v.begin(), v.end());
  };

  CglsResult result;
  result.x.assign(n, 0.0);
  Vector r(y.begin(), y.end());                                   // data block of the residual
  Vector r_l(use_reg ? (regularizer ? regularizer->rows() : n) : 0, 0.0); // regularizer block
  const Vector aty = op.apply_adjoint(y);
  Vector s = aty;
  Vector p = s;
  double gamma = squared_norm(s);

  const int limit = options.fixed_iterations > 0 ? options.fixed_iterations : options.max_iters;
  const bool fixed = options.fixed_iterations > 0;
  CglsTrace& trace = result.trace;

  for (int k = 1; k <= limit; ++k) {
    Vector q = op.apply(p);
    Vector q_l;
    double qq = squared_norm(q);
    if (use_reg) {
      q_l = apply_l(p);
      for (double& v : q_l) v *= root;
      qq += squared_norm(q_l);
    }
    const double alpha = (gamma == 0.0 || qq == 0.0) ? 0.0 : gamma / qq;
    if (!std::isfinite(alpha)) throw NumericalError("cgls: breakdown (non-finite step) at iteration " + std::to_string(k), k);

    axpy(alpha, p, result.x);
    axpy(-alpha, q, r);
    if (use_reg) axpy(-alpha, q_l, r_l);
    if (!all_finite(result.x)) throw NumericalError("cgls: NaN/inf in iterate " + std::to_string(k), k);

    s = op.apply_adjoint(r);
    if (use_reg) {
      Vector lt = apply_lt(r_l);
      axpy(root, lt, s);
    }
    const double gamma_new = squared_norm(s);
    const double step_sq = alpha * alpha * squared_norm(p);
    const double data_res_sq = squared_norm(r);

    trace.iterations = k;
    trace.residual_norms.push_back(std::sqrt(data_res_sq + squared_norm(r_l)));
    trace.normal_residual_norms.push_back(std::sqrt(gamma_new));
    if (options.record_iterates) trace.iterates.push_back(result.x);

    if (!fixed) {
      if (data_res_sq < options.tol_f) {
        trace.stop_reason = StopReason::ResidualTol;
        return result;
      }
      if (step_sq < options.tol_x) {
        trace.stop_reason = StopReason::StepTol;
        return result;
      }
    }

    const double beta = gamma == 0.0 ? 0.0 : gamma_new / gamma;
    for (std::size_t i = 0; i < n; ++i) p[i] = s[i] + beta * p[i];
    gamma = gamma_new;
  }
  trace.stop_reason = StopReason::MaxIters;
  return result;
}

CglsResult cgls(const LinearOperator& op, const TikhonovConfig& config, std::span<const double> y,
                bool record_iterates) {
  validate(config);
  CglsOptions options;
  options.tol_f = config.tol_f;
  options.tol_x = config.tol_x;
  options.max_iters = config.max_iters;
  options.record_iterates = record_iterates;
  return cgls(op, config.regularizer.get(), config.lambda, y, options);
}

void write_trace_csv(const CglsTrace& trace, std::ostream& out) {
  out << "iteration,residual_norm\n";
  for (std::size_t i = 0; i < trace.residual_norms.size(); ++i)
    out << (i + 1) << ',' << format_number(trace.residual_norms[i]) << '\n';
}

double check_kernel_condition(const LinearOperator& op, const LinearOperator& regularizer) {
  if (regularizer.cols() != op.cols()) throw ShapeError("kernel condition: column counts differ");
  const std::size_t m = op.rows() + regularizer.rows();
  if (m > 2 * kMaxDenseSvdDim || op.cols() > kMaxDenseSvdDim)
    throw CapabilityError("kernel condition check needs a dense-capable problem size");
  const DenseMatrix a = materialize(op);
  const DenseMatrix l = materialize(regularizer);
  DenseMatrix stacked(m, op.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) stacked(r, c) = a(r, c);
  for (std::size_t r = 0; r < l.rows(); ++r)
    for (std::size_t c = 0; c < l.cols(); ++c) stacked(a.rows() + r, c) = l(r, c);
  const SvdResult svd = jacobi_svd(stacked);
  const double smin = svd.sigma.back();
  if (smin <= 1e-12) throw RankDeficiencyError("ker A and ker L intersect nontrivially");
  return smin;
}

// ---------------------------------------------------------------------------
// Pseudo-inverse
// ---------------------------------------------------------------------------

PseudoInverse::PseudoInverse(OperatorPtr op, double truncation_threshold)
    : op_(std::move(op)), threshold_(truncation_threshold) {
  if (!op_) throw ParameterError("pseudo_inverse: null operator");
  if (!(threshold_ >= 0.0)) throw ParameterError("pseudo_inverse: threshold must be non-negative");
  if (op_->is_identity()) return;

  if (const CirculantSymbol* symbol = op_->circulant()) {
    inverse_gains_.resize(symbol->eigenvalues.size());
    for (std::size_t i = 0; i < inverse_gains_.size(); ++i) {
      const Complex a = symbol->eigenvalues[i];
      const double mag = std::abs(a);
      if (mag == 0.0 && threshold_ == 0.0)
        throw RankDeficiencyError("pseudo_inverse: zero eigenvalue at frequency " + std::to_string(i),
                                  static_cast<long>(i));
      inverse_gains_[i] = mag <= threshold_ ? Complex(0.0) : 1.0 / a;
    }
    return;
  }

  if (op_->rows() > kMaxDenseSvdDim || op_->cols() > kMaxDenseSvdDim)
    throw CapabilityError("pseudo_inverse: operator too large for the dense path");
  SvdResult svd = jacobi_svd(materialize(*op_));
  for (std::size_t i = 0; i < svd.sigma.size(); ++i) {
    if (svd.sigma[i] == 0.0 && threshold_ == 0.0)
      throw RankDeficiencyError("pseudo_inverse: zero singular value", static_cast<long>(i));
  }
  sigma_ = std::move(svd.sigma);
  u_ = std::move(svd.u);
  v_ = std::move(svd.v);
}

Vector PseudoInverse::evaluate(std::span<const double> y) const {
  if (op_->is_identity()) return Vector(y.begin(), y.end());
  if (const CirculantSymbol* symbol = op_->circulant()) {
    ComplexVector spectrum = fft2(y, symbol->shape);
    for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= inverse_gains_[i];
    return ifft2_real(spectrum, symbol->shape);
  }
  const Vector uty = u_.multiply_transpose(y);
  Vector coeff(sigma_.size(), 0.0);
  for (std::size_t i = 0; i < sigma_.size(); ++i)
    if (sigma_[i] > threshold_) coeff[i] = uty[i] / sigma_[i];
  return v_.multiply(coeff);
}

nlohmann::json PseudoInverse::describe() const {
  return {{"kind", "PseudoInverse"}, {"truncation_threshold", threshold_}};
}

std::shared_ptr<PseudoInverse> pseudo_inverse(OperatorPtr op, double truncation_threshold) {
  return std::make_shared<PseudoInverse>(std::move(op), truncation_threshold);
}

// ---------------------------------------------------------------------------
// Tikhonov and stabilizer
// ---------------------------------------------------------------------------

Tikhonov::Tikhonov(OperatorPtr op, TikhonovConfig config) : op_(std::move(op)), config_(std::move(config)) {
  if (!op_) throw ParameterError("tikhonov: null operator");
  validate(config_);
  if (config_.regularizer && config_.regularizer->cols() != op_->cols())
    throw ShapeError("tikhonov: regularizer does not match operator columns");
}

CglsResult Tikhonov::solve(std::span<const double> y, bool record_iterates) const {
  require_size(y, op_->rows(), "tikhonov");
  return cgls(*op_, config_, y, record_iterates);
}

Vector Tikhonov::evaluate(std::span<const double> y) const { return solve(y).x; }

nlohmann::json Tikhonov::describe() const {
  nlohmann::json j = tikhonov_json(config_);
  j["kind"] = "Tikhonov";
  return j;
}

std::shared_ptr<Tikhonov> tikhonov(OperatorPtr op, TikhonovConfig config) {
  return std::make_shared<Tikhonov>(std::move(op), std::move(config));
}

Stabilizer::Stabilizer(OperatorPtr op, StabilizerSpec spec) : op_(std::move(op)), spec_(std::move(spec)) {
  if (!op_) throw ParameterError("stabilizer: null operator");
  if (spec_.k < 1) throw ParameterError("stabilizer: k must be at least 1");
  validate(spec_.tikhonov);
}

Vector Stabilizer::evaluate(std::span<const double> y) const {
  CglsOptions options;
  options.fixed_iterations = spec_.k;
  return cgls(*op_, spec_.tikhonov.regularizer.get(), spec_.tikhonov.lambda, y, options).x;
}

nlohmann::json Stabilizer::describe() const {
  nlohmann::json j = tikhonov_json(spec_.tikhonov);
  j["kind"] = "Stabilizer";
  j["k"] = spec_.k;
  return j;
}

std::shared_ptr<Stabilizer> stabilizer(OperatorPtr op, StabilizerSpec spec) {
  return std::make_shared<Stabilizer>(std::move(op), std::move(spec));
}

// ---------------------------------------------------------------------------
// Composition, constant, linear
// ---------------------------------------------------------------------------

Composed::Composed(ReconstructorPtr gamma, ReconstructorPtr phi) : gamma_(std::move(gamma)), phi_(std::move(phi)) {
  if (!gamma_ || !phi_) throw ParameterError("compose: null reconstructor");
  if (phi_->output_dim() != gamma_->input_dim())
    throw ShapeError("compose: phi output dimension " + std::to_string(phi_->output_dim()) +
                     " does not match gamma input dimension " + std::to_string(gamma_->input_dim()));
}

Vector Composed::evaluate(std::span<const double> y) const { return gamma_->reconstruct(phi_->reconstruct(y)); }

nlohmann::json Composed::describe() const {
  return {{"kind", "Composed"}, {"gamma", gamma_->describe()}, {"phi", phi_->describe()}};
}

std::shared_ptr<Composed> compose(ReconstructorPtr gamma, ReconstructorPtr phi) {
  return std::make_shared<Composed>(std::move(gamma), std::move(phi));
}

Constant::Constant(std::span<const Vector> samples, std::size_t input_dim) : input_dim_(input_dim) {
  if (samples.empty()) throw ParameterError("constant_reconstructor: empty sample list");
  const std::size_t n = samples.front().size();
  mean_.assign(n, 0.0);
  for (const Vector& s : samples) {
    require_size(s, n, "constant_reconstructor sample");
    axpy(1.0, s, mean_);
  }
  for (double& v : mean_) v /= static_cast<double>(samples.size());
  if (input_dim_ == 0) input_dim_ = n;
}

std::shared_ptr<Constant> constant_reconstructor(std::span<const Vector> samples, std::size_t input_dim) {
  return std::make_shared<Constant>(samples, input_dim);
}

LinearReconstructor::LinearReconstructor(OperatorPtr map) : map_(std::move(map)) {
  if (!map_) throw ParameterError("LinearReconstructor: null operator");
}

std::shared_ptr<LinearReconstructor> identity_reconstructor(std::size_t n) {
  return std::make_shared<LinearReconstructor>(std::make_shared<IdentityOperator>(n));
}

} // namespace stablerec
