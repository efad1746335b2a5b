#ifndef STABLEREC_STABILITY_HPP
#define STABLEREC_STABILITY_HPP

#include "stablerec/reconstruct.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace stablerec {

/// e ~ N(0, delta^2 I); draw `index` is reproducible from (seed, index).
struct NoiseModel {
  double delta = 0.01;
  std::uint64_t seed = 0;

  Vector sample(std::size_t dim, std::size_t index, std::uint64_t attempt = 0) const;
};

struct TrialReport {
  std::size_t trial_index = 0;
  std::uint64_t seed = 0;
  double eta_hat = 0.0;
  double c_hat = 0.0;        // max of the ratios, clamped at 0
  double realized_eps = 0.0; // max ||e|| over the trial
  Vector per_sample_ratios;  // (||Psi(Ax+e) - x|| - eta_hat) / ||e||, unclamped
  Vector noise_norms;
  /// ||Psi(Ax+e) - Psi(Ax)|| / ||e|| on the same draws; filled when clean outputs are known.
  Vector per_sample_quotients;
};

struct Quartiles {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};

Quartiles quartiles(Vector values);

struct StabilityReport {
  std::vector<TrialReport> trials;
  double max_eta_hat = 0.0;
  double max_c_hat = 0.0;
  double max_realized_eps = 0.0;
  Quartiles eta_quartiles;
  Quartiles c_quartiles;
};

/// Psi(A x) for every signal; shared by accuracy and stability evaluation.
std::vector<Vector> clean_outputs(const Reconstructor& psi, const LinearOperator& op, std::span<const Vector> test_set);

/// max ||Psi(Ax) - x|| over the test set.
double empirical_accuracy(const Reconstructor& psi, const LinearOperator& op, std::span<const Vector> test_set);

/// One noise draw per sample. When `clean` (Psi(Ax) per sample) is given,
/// same-draw difference quotients are recorded as well.
TrialReport empirical_stability(const Reconstructor& psi, const LinearOperator& op, std::span<const Vector> test_set,
                                const NoiseModel& noise, double eta_hat,
                                const std::vector<Vector>* clean = nullptr);

/// T trials; trial i draws with seed base_seed + i.
StabilityReport repeated_stability(const Reconstructor& psi, const LinearOperator& op,
                                   std::span<const Vector> test_set, std::uint64_t base_seed, double delta, int trials);

StabilityReport aggregate(std::vector<TrialReport> trials);

struct LipschitzOptions {
  int probes = 64;
  std::vector<Vector> directions; // extra (e.g. adversarial) directions, rescaled to each probe norm
  std::uint64_t seed = 0;
};

/// Lower estimate of the local Lipschitz constant in an eps-ball around y.
double lipschitz_estimate(const Reconstructor& psi, std::span<const double> y, double eps,
                          const LipschitzOptions& options = {});

// ---------------------------------------------------------------------------
// Adversarial constructions and bounds
// ---------------------------------------------------------------------------

struct AdversarialPair {
  Vector x;
  Vector x_prime;
  Vector e_tilde; // A (x' - x)
  std::size_t t = 0;
  double eta = 0.0;
  double sigma_t = 0.0;
  double sigma_t1 = 0.0; // sigma_{t+1}
};

/// x' = x + (eta / sigma_t) * (unit vector of the trailing subspace after t).
AdversarialPair adversarial_pair(const LinearOperator& op, const SpectralDecomposition& spec, std::span<const double> x,
                                 std::size_t t, double eta, std::uint64_t seed);

/// (||A^+ e|| - 2 eta) / ||e||.
double tradeoff_lower_bound(double dagger_norm, double e_norm, double eta);

struct LipschitzLowerBound {
  double bound = 0.0;
  bool certified = false; // sigma_t <= eta / (eps + 2 eta)
  double threshold = 0.0; // eta / (eps + 2 eta)
};

/// (eta - 2 sigma_t eta) / (sigma_t eps) together with the instability certificate.
LipschitzLowerBound lipschitz_lower_bound(double sigma_t, double eta, double eps);

inline constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

/// Realized eps of the largest grid delta whose max Ĉ is strictly below one;
/// kInfiniteRadius if every delta passes, 0 if none does.
double stability_radius(const Reconstructor& psi, const LinearOperator& op, std::span<const Vector> test_set,
                        std::span<const double> delta_grid, int trials, std::uint64_t base_seed);

/// max ||Psi_theta(y) - Psi(y)|| over y = Ax (or one noisy draw per sample).
double approximation_gap(const Reconstructor& psi_theta, const Reconstructor& psi, const LinearOperator& op,
                         std::span<const Vector> test_set, const std::optional<NoiseModel>& noise = std::nullopt);

inline constexpr std::size_t kMaxSigmaPhiSamples = 2000;

/// max ||x1 - x2|| over pairs whose phi-images are within collision_tol.
double sigma_phi_estimate(const Reconstructor& phi, const LinearOperator& op, std::span<const Vector> samples,
                          double collision_tol);

struct CompositionBound {
  double c_composed = 0.0;   // clamped Ĉ of gamma∘phi
  double lipschitz_gamma = 0.0; // max ||gamma(a) - gamma(b)|| / ||a - b|| over phi-images
  double c_phi = 0.0;       // max ||phi(Ax+e) - phi(Ax)|| / ||e||
  bool holds() const { return c_composed <= lipschitz_gamma * c_phi + 1e-6; }
};

/// Evaluates both sides of the composition inequality on shared noise draws.
CompositionBound composition_bound(const Reconstructor& gamma, const Reconstructor& phi, const LinearOperator& op,
                                   std::span<const Vector> test_set, const NoiseModel& noise);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct NamedReconstructor {
  std::string name;
  ReconstructorPtr psi;
};

struct ErrorCurve {
  std::vector<std::string> names;
  Vector deltas;
  std::vector<Vector> mean_err; // [delta][reconstructor]
  std::vector<Vector> max_err;
};

/// Reconstruction error ||Psi(Ax+e) - x|| statistics over a delta grid.
ErrorCurve error_curve(std::span<const NamedReconstructor> recs, const LinearOperator& op,
                       std::span<const Vector> test_set, std::span<const double> deltas, std::uint64_t seed);

void write_error_curve_csv(const ErrorCurve& curve, std::ostream& out);
void write_report_csv(const StabilityReport& report, std::ostream& out);
nlohmann::json to_json(const TrialReport& trial);
nlohmann::json to_json(const StabilityReport& report);

} // namespace stablerec

#endif
