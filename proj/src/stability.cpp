#include "stablerec/stability.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace stablerec {

Vector NoiseModel::sample(std::size_t dim, std::size_t index, std::uint64_t attempt) const {
  return gaussian_vector(dim, delta, derive_seed(seed, index, attempt));
}

Quartiles quartiles(Vector values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

namespace {

void require_test_set(std::span<const Vector> test_set, const LinearOperator& op, const Reconstructor& psi) {
  if (test_set.empty()) throw ParameterError("test set must be non-empty");
  if (psi.input_dim() != op.rows() || psi.output_dim() != op.cols())
    throw ShapeError("reconstructor dimensions do not match the operator");
  for (const Vector& x : test_set) require_size(x, op.cols(), "test signal");
}

} // namespace

std::vector<Vector> clean_outputs(const Reconstructor& psi, const LinearOperator& op, std::span<const Vector> test_set) {
  require_test_set(test_set, op, psi);
  std::vector<Vector> out;
  out.reserve(test_set.size());
  for (const Vector& x : test_set) out.push_back(psi.reconstruct(op.apply(x)));
  return out;
}

double empirical_accuracy(const Reconstructor& psi, const LinearOperator& op, std::span<const Vector> test_set) {
  const std::vector<Vector> outputs = clean_outputs(psi, op, test_set);
  double eta = 0.0;
  for (std::size_t i = 0; i < test_set.size(); ++i) eta = std::max(eta, distance(outputs[i], test_set[i]));
  return eta;
}

TrialReport empirical_stability(const Reconstructor& psi, const LinearOperator& op, std::span<const Vector> test_set,
                                const NoiseModel& noise, double eta_hat, const std::vector<Vector>* clean) {
  require_test_set(test_set, op, psi);
  if (!(noise.delta > 0.0)) throw ParameterError("empirical_stability: noise delta must be positive");
  if (clean && clean->size() != test_set.size()) throw ShapeError("clean outputs do not match the test set");

  TrialReport report;
  report.seed = noise.seed;
  report.eta_hat = eta_hat;
  double c_max = 0.0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const Vector& x = test_set[i];
    Vector e = noise.sample(op.rows(), i);
    double e_norm = norm(e);
    if (e_norm == 0.0) {
      e = noise.sample(op.rows(), i, 1);
      e_norm = norm(e);
      if (e_norm == 0.0) throw NumericalError("empirical_stability: zero-norm noise draw", static_cast<long>(i));
    }
    Vector y = op.apply(x);
    axpy(1.0, e, y);
    const Vector out = psi.reconstruct(y);
    const double ratio = (distance(out, x) - eta_hat) / e_norm;
    report.per_sample_ratios.push_back(ratio);
    report.noise_norms.push_back(e_norm);
    if (clean) report.per_sample_quotients.push_back(distance(out, (*clean)[i]) / e_norm);
    c_max = std::max(c_max, ratio);
    report.realized_eps = std::max(report.realized_eps, e_norm);
  }
  report.c_hat = c_max;
  return report;
}

StabilityReport aggregate(std::vector<TrialReport> trials) {
  StabilityReport report;
  Vector etas, cs;
  for (const TrialReport& t : trials) {
    report.max_eta_hat = std::max(report.max_eta_hat, t.eta_hat);
    report.max_c_hat = std::max(report.max_c_hat, t.c_hat);
    report.max_realized_eps = std::max(report.max_realized_eps, t.realized_eps);
    etas.push_back(t.eta_hat);
    cs.push_back(t.c_hat);
  }
  report.eta_quartiles = quartiles(etas);
  report.c_quartiles = quartiles(cs);
  report.trials = std::move(trials);
  return report;
}

StabilityReport repeated_stability(const Reconstructor& psi, const LinearOperator& op,
                                   std::span<const Vector> test_set, std::uint64_t base_seed, double delta,
                                   int trials) {
  if (trials < 1) throw ParameterError("repeated_stability: T must be at least 1");
  const std::vector<Vector> clean = clean_outputs(psi, op, test_set);
  double eta = 0.0;
  for (std::size_t i = 0; i < test_set.size(); ++i) eta = std::max(eta, distance(clean[i], test_set[i]));

  std::vector<TrialReport> reports;
  reports.reserve(static_cast<std::size_t>(trials));
  for (int i = 0; i < trials; ++i) {
    const NoiseModel noise{delta, base_seed + static_cast<std::uint64_t>(i)};
    TrialReport t = empirical_stability(psi, op, test_set, noise, eta, &clean);
    t.trial_index = static_cast<std::size_t>(i);
    reports.push_back(std::move(t));
  }
  return aggregate(std::move(reports));
}

double lipschitz_estimate(const Reconstructor& psi, std::span<const double> y, double eps,
                          const LipschitzOptions& options) {
  if (!(eps > 0.0)) throw ParameterError("lipschitz_estimate: eps must be positive");
  if (options.probes < 1) throw ParameterError("lipschitz_estimate: probes must be at least 1");
  const Vector base = psi.reconstruct(y);
  const double scales[3] = {1.0, 0.1, 0.01};

  double best = 0.0;
  auto probe = [&](const Vector& unit, double radius) {
    Vector z(y.begin(), y.end());
    axpy(radius, unit, z);
    const double dz = distance(z, y);
    if (dz == 0.0) return;
    best = std::max(best, distance(psi.reconstruct(z), base) / dz);
  };

  for (int j = 0; j < options.probes; ++j) {
    Vector dir = gaussian_vector(y.size(), 1.0, derive_seed(options.seed, static_cast<std::uint64_t>(j)));
    const double len = norm(dir);
    if (len == 0.0) continue;
    for (double& v : dir) v /= len;
    probe(dir, eps * scales[j % 3]);
  }
  for (const Vector& d : options.directions) {
    require_size(d, y.size(), "lipschitz direction");
    const double len = norm(d);
    if (len == 0.0) continue;
    const Vector unit = scaled(d, 1.0 / len);
    for (double s : scales) probe(unit, eps * s);
  }
  return best;
}

AdversarialPair adversarial_pair(const LinearOperator& op, const SpectralDecomposition& spec, std::span<const double> x,
                                 std::size_t t, double eta, std::uint64_t seed) {
  require_size(x, op.cols(), "adversarial_pair");
  if (!(eta > 0.0)) throw ParameterError("adversarial_pair: eta must be positive");
  if (t < 1 || t >= spec.size()) throw ParameterError("adversarial_pair: need 1 <= t < n");
  const double sigma_t = spec.singular_values()[t - 1];
  if (sigma_t <= 1e-14) throw DegenerateSpectrumError("adversarial_pair: sigma_t is numerically zero", static_cast<long>(t));

  const Vector unit = trailing_subspace_vector(spec, t, seed);
  const Vector dx = scaled(unit, eta / sigma_t);
  AdversarialPair pair;
  pair.x.assign(x.begin(), x.end());
  pair.x_prime = add(x, dx);
  pair.e_tilde = op.apply(dx);
  pair.t = t;
  pair.eta = eta;
  pair.sigma_t = sigma_t;
  pair.sigma_t1 = spec.singular_values()[t];
  return pair;
}

double tradeoff_lower_bound(double dagger_norm, double e_norm, double eta) {
  if (!(e_norm > 0.0)) throw ParameterError("tradeoff_lower_bound: noise norm must be positive");
  return (dagger_norm - 2.0 * eta) / e_norm;
}

LipschitzLowerBound lipschitz_lower_bound(double sigma_t, double eta, double eps) {
  if (!(sigma_t > 0.0)) throw ParameterError("lipschitz_lower_bound: sigma_t must be positive");
  if (!(eps > 0.0)) throw ParameterError("lipschitz_lower_bound: eps must be positive");
  if (eta < 0.0) throw ParameterError("lipschitz_lower_bound: eta must be non-negative");
  LipschitzLowerBound out;
  out.bound = (eta - 2.0 * sigma_t * eta) / (sigma_t * eps);
  out.threshold = eta / (eps + 2.0 * eta);
  out.certified = eta > 0.0 && sigma_t <= out.threshold;
  return out;
}

double stability_radius(const Reconstructor& psi, const LinearOperator& op, std::span<const Vector> test_set,
                        std::span<const double> delta_grid, int trials, std::uint64_t base_seed) {
  if (delta_grid.empty()) throw ParameterError("stability_radius: empty delta grid");
  for (std::size_t i = 1; i < delta_grid.size(); ++i)
    if (!(delta_grid[i] > delta_grid[i - 1])) throw ParameterError("stability_radius: delta grid must be ascending");

  bool all_pass = true;
  double radius = 0.0;
  for (double delta : delta_grid) {
    const StabilityReport report = repeated_stability(psi, op, test_set, base_seed, delta, trials);
    // Strict "< 1" with a guard so that an exact quotient of one (computed as
    // 1 - ulp) does not count as stable.
    if (report.max_c_hat < 1.0 - 1e-12) {
      radius = report.max_realized_eps;
    } else {
      all_pass = false;
    }
  }
  return all_pass ? kInfiniteRadius : radius;
}

double approximation_gap(const Reconstructor& psi_theta, const Reconstructor& psi, const LinearOperator& op,
                         std::span<const Vector> test_set, const std::optional<NoiseModel>& noise) {
  if (psi_theta.input_dim() != psi.input_dim() || psi_theta.output_dim() != psi.output_dim())
    throw ShapeError("approximation_gap: reconstructor dimensions differ");
  require_test_set(test_set, op, psi);
  double gap = 0.0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    Vector y = op.apply(test_set[i]);
    if (noise) axpy(1.0, noise->sample(op.rows(), i), y);
    gap = std::max(gap, distance(psi_theta.reconstruct(y), psi.reconstruct(y)));
  }
  return gap;
}

double sigma_phi_estimate(const Reconstructor& phi, const LinearOperator& op, std::span<const Vector> samples,
                          double collision_tol) {
  if (samples.size() > kMaxSigmaPhiSamples)
    throw CapabilityError("sigma_phi_estimate: at most " + std::to_string(kMaxSigmaPhiSamples) + " samples");
  if (!(collision_tol > 0.0)) throw ParameterError("sigma_phi_estimate: collision tolerance must be positive");
  if (phi.input_dim() != op.rows()) throw ShapeError("sigma_phi_estimate: phi input does not match operator");
  std::vector<Vector> images;
  images.reserve(samples.size());
  for (const Vector& x : samples) images.push_back(phi.reconstruct(op.apply(x)));
  double sigma = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j)
      if (distance(images[i], images[j]) <= collision_tol) sigma = std::max(sigma, distance(samples[i], samples[j]));
  return sigma;
}

CompositionBound composition_bound(const Reconstructor& gamma, const Reconstructor& phi, const LinearOperator& op,
                                   std::span<const Vector> test_set, const NoiseModel& noise) {
  const Composed psi(std::shared_ptr<const Reconstructor>(&gamma, [](const Reconstructor*) {}),
                     std::shared_ptr<const Reconstructor>(&phi, [](const Reconstructor*) {}));
  require_test_set(test_set, op, psi);

  const std::size_t count = test_set.size();
  std::vector<Vector> phi_clean(count), psi_clean(count);
  double eta = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    phi_clean[i] = phi.reconstruct(op.apply(test_set[i]));
    psi_clean[i] = gamma.reconstruct(phi_clean[i]);
    eta = std::max(eta, distance(psi_clean[i], test_set[i]));
  }

  CompositionBound out;
  for (std::size_t i = 0; i < count; ++i) {
    Vector e = noise.sample(op.rows(), i);
    const double e_norm = norm(e);
    if (e_norm == 0.0) continue;
    Vector y = op.apply(test_set[i]);
    axpy(1.0, e, y);
    const Vector a = phi.reconstruct(y);
    const Vector out_noisy = gamma.reconstruct(a);
    out.c_composed = std::max(out.c_composed, (distance(out_noisy, test_set[i]) - eta) / e_norm);
    const double dphi = distance(a, phi_clean[i]);
    out.c_phi = std::max(out.c_phi, dphi / e_norm);
    if (dphi > 0.0) out.lipschitz_gamma = std::max(out.lipschitz_gamma, distance(out_noisy, psi_clean[i]) / dphi);
  }
  return out;
}

ErrorCurve error_curve(std::span<const NamedReconstructor> recs, const LinearOperator& op,
                       std::span<const Vector> test_set, std::span<const double> deltas, std::uint64_t seed) {
  ErrorCurve curve;
  for (const NamedReconstructor& r : recs) {
    require_test_set(test_set, op, *r.psi);
    curve.names.push_back(r.name);
  }
  curve.deltas.assign(deltas.begin(), deltas.end());
  for (std::size_t d = 0; d < deltas.size(); ++d) {
    const NoiseModel noise{deltas[d], derive_seed(seed, d)};
    std::vector<Vector> noisy;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
      Vector y = op.apply(test_set[i]);
      if (deltas[d] > 0.0) axpy(1.0, noise.sample(op.rows(), i), y);
      noisy.push_back(std::move(y));
    }
    Vector means, maxes;
    for (const NamedReconstructor& r : recs) {
      double sum = 0.0, mx = 0.0;
      for (std::size_t i = 0; i < test_set.size(); ++i) {
        const double err = distance(r.psi->reconstruct(noisy[i]), test_set[i]);
        sum += err;
        mx = std::max(mx, err);
      }
      means.push_back(sum / static_cast<double>(test_set.size()));
      maxes.push_back(mx);
    }
    curve.mean_err.push_back(std::move(means));
    curve.max_err.push_back(std::move(maxes));
  }
  return curve;
}

void write_error_curve_csv(const ErrorCurve& curve, std::ostream& out) {
  out << "delta";
  for (const std::string& name : curve.names) out << ',' << name << "_mean_err," << name << "_max_err";
  out << '\n';
  for (std::size_t d = 0; d < curve.deltas.size(); ++d) {
    out << format_number(curve.deltas[d]);
    for (std::size_t r = 0; r < curve.names.size(); ++r)
      out << ',' << format_number(curve.mean_err[d][r]) << ',' << format_number(curve.max_err[d][r]);
    out << '\n';
  }
}

void write_report_csv(const StabilityReport& report, std::ostream& out) {
  out << "trial,eta_hat,c_hat,realized_eps\n";
  for (const TrialReport& t : report.trials)
    out << t.trial_index << ',' << format_number(t.eta_hat) << ',' << format_number(t.c_hat) << ','
        << format_number(t.realized_eps) << '\n';
}

nlohmann::json to_json(const TrialReport& trial) {
  return {{"trial", trial.trial_index},       {"seed", trial.seed},
          {"eta_hat", trial.eta_hat},         {"c_hat", trial.c_hat},
          {"realized_eps", trial.realized_eps}, {"per_sample_ratios", trial.per_sample_ratios},
          {"noise_norms", trial.noise_norms}};
}

nlohmann::json to_json(const StabilityReport& report) {
  nlohmann::json trials = nlohmann::json::array();
  for (const TrialReport& t : report.trials) trials.push_back(to_json(t));
  auto q = [](const Quartiles& x) { return nlohmann::json{{"q1", x.q1}, {"median", x.median}, {"q3", x.q3}}; };
  return {{"trials", trials},
          {"max_eta_hat", report.max_eta_hat},
          {"max_c_hat", report.max_c_hat},
          {"max_realized_eps", report.max_realized_eps},
          {"eta_hat_quartiles", q(report.eta_quartiles)},
          {"c_hat_quartiles", q(report.c_quartiles)}};
}

} // namespace stablerec
