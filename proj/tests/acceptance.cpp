// Acceptance harness: one PASS/FAIL line per criterion. Reference values come
// from the independent oracles in oracles.hpp, never from the library itself.
#include "oracles.hpp"

#include "stablerec/experiment.hpp"
#include "stablerec/svd.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

using namespace stablerec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::vector<Vector> random_set(std::size_t count, std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(oracle::random_vector(n, seed + i, lo, hi));
  return out;
}

std::vector<Vector> blob_signals(std::size_t count, const Shape& shape, std::uint64_t seed) {
  std::vector<Vector> out;
  for (const GrayImage& img : synthesize_images(count, shape, SynthKind::Blobs, seed))
    out.push_back(normalize(img).pixels);
  return out;
}

// Random kernel with a dominant centre so that its symbol never vanishes.
ConvolutionKernel random_kernel(int radius, std::uint64_t seed) {
  const std::size_t side = static_cast<std::size_t>(2 * radius + 1);
  Vector w = oracle::random_vector(side * side, seed, 0.0, 0.1);
  w[side * side / 2] += 1.0;
  return ConvolutionKernel(radius, w);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stablerec_acceptance_" + name);
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), dir).string()] = {std::istreambuf_iterator<char>(in), {}};
  }
  return files;
}

// ---------------------------------------------------------------------------

Outcome operator_correctness() {
  const Shape s{8, 8};
  std::vector<ConvolutionKernel> kernels{build_gaussian_kernel(3, 1.3, true), build_gaussian_kernel(1, 0.7, false),
                                         random_kernel(2, 11), random_kernel(3, 12), second_difference_stencil()};
  double worst_entry = 0.0, worst_adj = 0.0;
  for (std::size_t ki = 0; ki < kernels.size(); ++ki) {
    const ConvolutionOperator op(s, kernels[ki]);
    const DenseMatrix dense = oracle::convolution_matrix(s, kernels[ki]);
    const DenseMatrix fwd = materialize(op);
    for (std::size_t c = 0; c < 64; ++c) {
      Vector unit(64, 0.0);
      unit[c] = 1.0;
      const Vector adj = op.apply_adjoint(unit);
      for (std::size_t r = 0; r < 64; ++r) {
        worst_entry = std::max(worst_entry, std::abs(fwd(r, c) - dense(r, c)));
        // Row c of the adjoint's dense form is column c of A^T, i.e. row c of A.
        worst_entry = std::max(worst_entry, std::abs(adj[r] - dense(c, r)));
      }
    }
    for (std::uint64_t p = 0; p < 100; ++p) {
      const Vector x = oracle::random_vector(64, 1000 * ki + 2 * p);
      const Vector y = oracle::random_vector(64, 1000 * ki + 2 * p + 1);
      const double lhs = oracle::dot(op.apply(x), y);
      const double rhs = oracle::dot(x, op.apply_adjoint(y));
      const double scale = oracle::norm(op.apply(x)) * oracle::norm(y) + oracle::norm(x) * oracle::norm(op.apply_adjoint(y));
      worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / scale);
    }
  }
  return {worst_entry <= 1e-10 && worst_adj <= 1e-10,
          "max entry diff " + fmt("%.3g", worst_entry) + ", max adjoint rel " + fmt("%.3g", worst_adj)};
}

Outcome spectrum_correctness() {
  const Shape s{8, 8};
  std::vector<ConvolutionKernel> kernels{build_gaussian_kernel(3, 1.3, true), random_kernel(2, 21), random_kernel(3, 22)};
  double worst_sigma = 0.0, worst_resid = 0.0;
  for (const ConvolutionKernel& k : kernels) {
    const std::vector<Complex> symbol = oracle::kernel_symbol(s, k);
    Vector mags;
    for (const Complex& z : symbol) mags.push_back(std::abs(z));
    std::sort(mags.begin(), mags.end(), std::greater<>());

    const DenseMatrix a = oracle::convolution_matrix(s, k);
    const SvdResult svd = jacobi_svd(a);
    for (std::size_t i = 0; i < 64; ++i) worst_sigma = std::max(worst_sigma, std::abs(svd.sigma[i] - mags[i]));
    for (std::size_t i = 0; i < 64; ++i) {
      const Vector av = a.multiply(svd.v.column(i));
      double r = 0.0;
      for (std::size_t j = 0; j < 64; ++j) r += std::pow(av[j] - svd.sigma[i] * svd.u(j, i), 2);
      worst_resid = std::max(worst_resid, std::sqrt(r) / svd.sigma[0]);
    }
    // The circulant fast path must agree with the same oracle.
    const SpectralDecomposition fast = spectral_decomposition(ConvolutionOperator(s, k));
    for (std::size_t i = 0; i < 64; ++i)
      worst_sigma = std::max(worst_sigma, std::abs(fast.singular_values()[i] - mags[i]));
  }
  return {worst_sigma <= 1e-8 && worst_resid <= 1e-8,
          "max sigma diff " + fmt("%.3g", worst_sigma) + ", max residual/sigma_1 " + fmt("%.3g", worst_resid)};
}

Outcome pseudo_inverse_accuracy() {
  double worst = 0.0;
  int problems = 0;
  for (std::uint64_t p = 0; p < 50; ++p) {
    OperatorPtr op;
    std::size_t n = 0;
    if (p % 2 == 0) {
      // Dense, square or tall, generic entries.
      n = 8 + 4 * (p % 5);
      const std::size_t m = n + (p % 4 == 0 ? 0 : 6);
      op = std::make_shared<DenseOperator>(DenseMatrix(m, n, oracle::random_vector(m * n, 500 + p)));
    } else {
      const Shape s = p % 3 == 0 ? Shape{16, 16} : Shape{8, 8};
      n = s.size();
      op = build_convolution_operator(s, random_kernel(1 + static_cast<int>(p % 3), 600 + p));
    }
    const std::vector<Vector> xs = random_set(10, n, 700 + 20 * p);
    worst = std::max(worst, empirical_accuracy(*pseudo_inverse(op), *op, xs));
    ++problems;
  }
  return {worst <= 1e-8, std::to_string(problems) + " problems, max eta_hat " + fmt("%.3g", worst)};
}

Outcome tikhonov_cgls() {
  const Shape s{8, 8};
  const GaussianKernel k = build_gaussian_kernel(3, 1.3, true);
  const OperatorPtr a = build_convolution_operator(s, k);
  const auto l = std::make_shared<GradientOperator>(s);
  const DenseMatrix ad = oracle::convolution_matrix(s, k);
  const DenseMatrix ld = oracle::gradient_matrix(s);

  // Agreement with the dense solve under solver tolerances well below the target accuracy.
  double worst_match = 0.0;
  for (double lambda : {1e-3, 1e-2, 1e-1, 1.0}) {
    for (std::uint64_t i = 0; i < 3; ++i) {
      const Vector y = oracle::random_vector(64, 800 + i, 0.0, 1.0);
      CglsOptions o;
      o.tol_f = o.tol_x = 1e-28;
      o.max_iters = 5000;
      const Vector x = cgls(*a, l.get(), lambda, y, o).x;
      worst_match = std::max(worst_match, oracle::max_abs_diff(x, oracle::tikhonov_dense(ad, ld, lambda, y)));
    }
  }

  // Default tolerances 1e-6 on both stop rules: the first iterate satisfying either rule is returned.
  bool honoured = true;
  for (std::uint64_t i = 0; i < 3; ++i) {
    const Vector y = oracle::random_vector(64, 820 + i, 0.0, 1.0);
    TikhonovConfig cfg;
    cfg.regularizer = l;
    const CglsResult r = cgls(*a, cfg, y, true);
    Vector prev(64, 0.0);
    for (std::size_t it = 0; it < r.trace.iterates.size(); ++it) {
      const Vector& x = r.trace.iterates[it];
      Vector res = ad.multiply(x);
      for (std::size_t j = 0; j < 64; ++j) res[j] = y[j] - res[j];
      double step = 0.0;
      for (std::size_t j = 0; j < 64; ++j) step += (x[j] - prev[j]) * (x[j] - prev[j]);
      const bool stop = oracle::dot(res, res) < 1e-6 || step < 1e-6;
      honoured = honoured && stop == (it + 1 == r.trace.iterates.size());
      prev = x;
    }
    honoured = honoured && r.trace.stop_reason != StopReason::MaxIters;
  }

  // Shrinkage over the lambda grid with L = I.
  const std::vector<double> grid{0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e2, 1e4, 1e6};
  bool monotone = true;
  double ratio_at_max = 0.0;
  for (std::uint64_t i = 0; i < 3; ++i) {
    const Vector y = oracle::random_vector(64, 840 + i, 0.0, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
      TikhonovConfig cfg;
      cfg.lambda = lambda;
      cfg.tol_f = cfg.tol_x = 1e-28;
      cfg.max_iters = 5000;
      const double nx = oracle::norm(tikhonov(a, cfg)->reconstruct(y));
      monotone = monotone && nx <= prev * (1.0 + 1e-9);
      prev = nx;
      if (lambda == 1e6) ratio_at_max = std::max(ratio_at_max, nx / oracle::norm(y));
    }
  }
  return {worst_match <= 1e-5 && honoured && monotone && ratio_at_max <= 1e-4,
          "max diff " + fmt("%.3g", worst_match) + ", stop rules " + (honoured ? "ok" : "violated") +
              ", monotone " + (monotone ? "yes" : "no") + ", |x|/|y| at 1e6 " + fmt("%.3g", ratio_at_max)};
}

Outcome adversarial_construction() {
  const OperatorPtr a = build_operator(OperatorDescriptor{});
  const SpectralDecomposition spec = spectral_decomposition(*a);
  const std::size_t n = spec.size();
  const std::vector<Vector> xs = blob_signals(3, {32, 32}, 41);
  double worst_bound = -1e300, worst_len = 0.0, worst_eta = -1e300;
  for (double eta : {0.01, 0.1}) {
    for (std::size_t j = 1; j <= 9; ++j) {
      const std::size_t t = n * j / 10;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const AdversarialPair p = adversarial_pair(*a, spec, xs[i], t, eta, 100 * j + i);
        const Vector d = subtract(p.x_prime, p.x);
        const double dn = oracle::norm(d);
        const double ad = oracle::norm(oracle::periodic_convolution(d, {32, 32}, build_gaussian_kernel(5, 1.3, true)));
        const double sigma_t = spec.singular_values()[t - 1], sigma_t1 = spec.singular_values()[t];
        worst_bound = std::max(worst_bound, ad - (sigma_t1 * dn + 1e-8));
        worst_eta = std::max(worst_eta, ad - eta);
        worst_len = std::max(worst_len, std::abs(dn - eta / sigma_t));
      }
    }
  }
  return {worst_bound <= 0.0 && worst_eta < 0.0 && worst_len <= 1e-8,
          "max excess over sigma_{t+1}|dx| " + fmt("%.3g", worst_bound) + ", max |A dx| - eta " + fmt("%.3g", worst_eta) +
              ", max length error " + fmt("%.3g", worst_len)};
}

Outcome tradeoff() {
  const OperatorPtr a = std::make_shared<DenseOperator>(DenseMatrix::diagonal(Vector{1.0, 1e-3}));
  const auto pi = pseudo_inverse(a);
  const std::vector<Vector> xs = random_set(8, 2, 51);
  const double eta = empirical_accuracy(*pi, *a, xs);
  double worst_gap = 1e300, min_ratio = 1e300;
  for (const Vector& x : xs) {
    for (double s : {1e-4, 1e-3, 1e-2, -0.05}) {
      const Vector e{0.0, s};
      const Vector rec = pi->reconstruct(add(a->apply(x), e));
      const double ratio = (oracle::norm(subtract(rec, x)) - eta) / std::abs(s);
      // ||A^+ e|| from the diagonal directly.
      const double bound = tradeoff_lower_bound(std::abs(s) / 1e-3, std::abs(s), eta) - 1e-8;
      worst_gap = std::min(worst_gap, ratio - bound);
      min_ratio = std::min(min_ratio, ratio);
    }
  }
  return {eta <= 1e-8 && worst_gap >= 0.0 && min_ratio >= 999.9,
          "eta_hat " + fmt("%.3g", eta) + ", min ratio " + fmt("%.10g", min_ratio) + ", min ratio - bound " +
              fmt("%.3g", worst_gap)};
}

Outcome ratio_vs_quotient() {
  const Shape s{16, 16};
  const OperatorPtr a = build_convolution_operator(s, build_gaussian_kernel(5, 1.3, true));
  const std::vector<Vector> train = blob_signals(16, s, 61);
  const std::vector<Vector> xs = blob_signals(8, s, 62);
  TikhonovConfig cfg;
  cfg.regularizer = std::make_shared<GradientOperator>(s);
  const auto phi = stabilizer(a, {3, cfg});

  std::vector<std::pair<std::string, ReconstructorPtr>> recs{
      {"PI", pseudo_inverse(a)},
      {"IS", tikhonov(a, cfg)},
      {"phi3", phi},
      {"constant", constant_reconstructor(train, s.size())},
      {"filter", as_reconstructor(std::make_shared<LinearFourierFilter>(s, Complex(1.2, 0.0)))},
      {"convnet", as_reconstructor(std::make_shared<ConvNetModel>(s, std::vector<std::uint32_t>{1, 8, 8, 1}, true, 3))},
      {"convnet o phi3", as_reconstructor(std::make_shared<ConvNetModel>(s, std::vector<std::uint32_t>{1, 8, 8, 1}, true, 4), phi)}};
  double worst = -1e300;
  std::size_t checked = 0;
  for (const auto& [name, psi] : recs) {
    for (double delta : {0.01, 0.1}) {
      const StabilityReport r = repeated_stability(*psi, *a, xs, 63, delta, 20);
      for (const TrialReport& t : r.trials) {
        for (std::size_t i = 0; i < t.per_sample_ratios.size(); ++i) {
          worst = std::max(worst, std::max(0.0, t.per_sample_ratios[i]) - t.per_sample_quotients[i]);
          ++checked;
        }
      }
    }
  }
  return {worst <= 1e-10, std::to_string(checked) + " samples over " + std::to_string(recs.size()) +
                              " reconstructors, max clamped ratio - quotient " + fmt("%.3g", worst)};
}

Outcome composition() {
  const Shape s{16, 16};
  const OperatorPtr a = build_convolution_operator(s, build_gaussian_kernel(5, 1.3, true));
  TikhonovConfig cfg;
  cfg.regularizer = std::make_shared<GradientOperator>(s);
  const auto phi = stabilizer(a, {3, cfg});
  const std::vector<Vector> train_x = blob_signals(32, s, 71);
  const std::vector<Vector> xs = blob_signals(8, s, 72);
  const DatasetPairs data = build_dataset(train_x, a, TrainMode::StNN, &cfg, 3, 0.0, 0.0, 73);

  TrainConfig tc;
  tc.epochs = 20;
  tc.learning_rate = 0.05;
  tc.seed = 74;
  const TrainResult filter = train(LinearFourierFilter(s, 1.0), data, tc);
  tc.learning_rate = 0.01;
  const TrainResult net = train(ConvNetModel(s, {1, 8, 8, 1}, true, 75), data, tc);

  std::string detail;
  bool pass = true;
  for (const auto& [name, model] :
       std::vector<std::pair<std::string, const Model*>>{{"filter", filter.model.get()}, {"convnet", net.model.get()}}) {
    const auto gamma = as_reconstructor(std::shared_ptr<const Model>(model->clone()));
    for (double delta : {0.01, 0.05}) {
      const CompositionBound b = composition_bound(*gamma, *phi, *a, xs, NoiseModel{delta, 76});
      pass = pass && b.holds();
      detail += name + "@" + fmt("%g", delta) + ": C=" + fmt("%.4g", b.c_composed) + " <= L*C_phi=" +
                fmt("%.4g", b.lipschitz_gamma * b.c_phi) + "; ";
    }
  }
  return {pass, detail};
}

Outcome gradient_checks() {
  const Shape s{8, 8};
  const OperatorPtr a = build_convolution_operator(s, build_gaussian_kernel(3, 1.3, true));
  const DatasetPairs d = build_dataset(random_set(6, 64, 81), a, TrainMode::NN, nullptr, 0, 0.0, 0.0, 82);
  const std::vector<std::size_t> batch{0, 2, 3, 5};
  auto rel = [](const Vector& g, const Vector& fd) {
    double w = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      w = std::max(w, std::abs(g[i] - fd[i]) / std::max({std::abs(g[i]), std::abs(fd[i]), 1e-6}));
    return w;
  };
  ComplexVector gains(64);
  for (std::size_t i = 0; i < 64; ++i)
    gains[i] = Complex(0.7 + 0.2 * std::cos(0.3 * static_cast<double>(i)), 0.1 * std::sin(static_cast<double>(i)));
  // A 1e-6 step keeps central differences from straddling ReLU kinks.
  const double h = 1e-6;
  const LinearFourierFilter f(s, gains);
  const double ef = rel(loss_and_gradients(f, d, batch).gradient, finite_difference_gradient(f, d, batch, h));
  const ConvNetModel net(s, {1, 8, 8, 1}, true, 83);
  const double en = rel(loss_and_gradients(net, d, batch).gradient, finite_difference_gradient(net, d, batch, h));
  return {ef < 1e-4 && en < 1e-4, "filter rel err " + fmt("%.3g", ef) + ", convnet rel err " + fmt("%.3g", en)};
}

Outcome closed_form_training() {
  const Shape s{16, 16};
  const GaussianKernel k = build_gaussian_kernel(2, 0.7, true);
  const ConvolutionKernel stencil = second_difference_stencil();
  const OperatorPtr a = build_convolution_operator(s, k);
  const double lambda = 0.01;
  TikhonovConfig cfg;
  cfg.lambda = lambda;
  cfg.regularizer = build_convolution_operator(s, stencil);
  cfg.tol_f = cfg.tol_x = 1e-30;
  cfg.max_iters = 20000;

  const std::vector<Vector> xs = random_set(32, s.size(), 91);
  const DatasetPairs data = build_dataset(xs, a, TrainMode::ReNN, &cfg, 0, 0.0, 0.0, 92);
  TrainConfig tc;
  tc.epochs = 5000;
  tc.batch_size = static_cast<int>(xs.size());
  tc.learning_rate = 0.03;
  tc.lr_decay = 1e-3 / 0.03;
  tc.shuffle = false;
  tc.seed = 93;
  const TrainResult r = train(LinearFourierFilter(s, 0.0), data, tc);
  const auto& filter = dynamic_cast<const LinearFourierFilter&>(*r.model);

  const std::vector<Complex> ahat = oracle::kernel_symbol(s, k);
  const std::vector<Complex> lhat = oracle::kernel_symbol(s, stencil);
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Complex target = std::conj(ahat[i]) / (std::norm(ahat[i]) + lambda * std::norm(lhat[i]));
    worst = std::max(worst, std::abs(filter.gain(i) - target));
  }
  return {worst <= 1e-3, "5000 full-batch steps, max gain error " + fmt("%.3g", worst)};
}

Outcome approximation_echo() {
  // Periodic L keeps the Tikhonov map circulant, hence inside the filter family.
  ExperimentConfig c = default_config("A");
  c.regularizer = "periodic_gradient";
  const ExperimentData data = load_experiment_data(c);
  const OperatorPtr a = build_operator(c.op);
  const TikhonovConfig cfg = tikhonov_config(c);
  const auto is = tikhonov(a, cfg);
  const DatasetPairs pairs = build_dataset(data.train, a, TrainMode::ReNN, &cfg, 0, 0.0, 0.0, 101);
  TrainConfig tc = c.train;
  tc.seed = 102;
  tc.checkpoint_epochs = {1, 2, 5, 10, 20, 30, 40};
  const TrainResult r = train(LinearFourierFilter(c.op.shape, 1.0), pairs, tc);

  const double eta_is = empirical_accuracy(*is, *a, data.test);
  bool holds = true;
  double first = 0.0, last = 0.0;
  for (const Checkpoint& cp : r.checkpoints) {
    const auto psi = as_reconstructor(std::shared_ptr<const Model>(restore(*r.model, cp)));
    const double eta_theta = empirical_accuracy(*psi, *a, data.test);
    const double gap = approximation_gap(*psi, *is, *a, data.test);
    holds = holds && eta_theta <= eta_is + gap + 1e-10;
    if (cp.epoch == 0) first = gap;
    last = gap;
  }
  return {holds && last <= 0.1 * first, std::to_string(r.checkpoints.size()) + " checkpoints, inequality " +
                                            (holds ? "holds" : "violated") + ", gap " + fmt("%.4g", first) + " -> " +
                                            fmt("%.4g", last)};
}

double column_c(const ExperimentResult& r, const std::string& name, std::size_t delta_index = 0) {
  for (const ColumnResult& col : r.columns)
    if (col.name == name && col.ok) return col.reports.at(delta_index).max_c_hat;
  return std::numeric_limits<double>::quiet_NaN();
}

Outcome experiment_a() {
  const std::clock_t start = std::clock();
  ExperimentConfig c = default_config("A");
  c.out = scratch("A").string();
  const ExperimentResult r = run_experiment(c);
  const double cpu = static_cast<double>(std::clock() - start) / CLOCKS_PER_SEC;
  const double nn = column_c(r, "NN"), st = column_c(r, "StNN"), re = column_c(r, "ReNN"), stre = column_c(r, "StReNN");
  fs::remove_all(c.out);
  return {nn > 1.0 && st < 1.0 && stre < 1.0 && re < nn && cpu < 600.0,
          "C(NN)=" + fmt("%.4g", nn) + " C(StNN)=" + fmt("%.4g", st) + " C(ReNN)=" + fmt("%.4g", re) +
              " C(StReNN)=" + fmt("%.4g", stre) + ", cpu " + fmt("%.1f", cpu) + " s"};
}

Outcome experiment_b() {
  ExperimentConfig c = default_config("B");
  c.mode = {"NN"};
  c.include_is = false;
  c.delta = {0.075};
  c.curve_delta = {0.0};
  c.out = scratch("B").string();
  const double injected = column_c(run_experiment(c), "NN");
  c.injection_delta = 0.0;
  const double plain = column_c(run_experiment(c), "NN");
  fs::remove_all(c.out);
  return {injected < plain, "C(NN, injected)=" + fmt("%.4g", injected) + " C(NN, noiseless)=" + fmt("%.4g", plain)};
}

Outcome determinism() {
  bool same = true;
  std::size_t files = 0;
  std::string differing;
  // Same config, same output directory: the second run must rewrite identical bytes.
  const auto run_twice = [&](const std::string& tag, const std::function<void(const std::string&)>& run) {
    const fs::path dir = scratch(tag);
    run(dir.string());
    const auto first = snapshot(dir);
    run(dir.string());
    const auto second = snapshot(dir);
    same = same && !first.empty() && first.size() == second.size();
    for (const auto& [name, bytes] : first) {
      const auto it = second.find(name);
      if (it == second.end() || it->second != bytes) {
        same = false;
        differing += " " + tag + "/" + name;
      }
    }
    files += first.size();
    fs::remove_all(dir);
  };
  for (const char* exp : {"A", "B", "C"}) {
    ExperimentConfig c = default_config(exp);
    c.op.shape = {16, 16};
    c.train_count = 8;
    c.test_count = 4;
    c.trials = 3;
    c.train.epochs = 3;
    c.curve_delta = {0.0, 0.05};
    run_twice(std::string("det") + exp, [base = c](const std::string& out) {
      ExperimentConfig c = base;
      c.out = out;
      run_experiment(c);
      gen_data(c);
      run_bounds(c);
      c.lambda_grid = {1e-2, 1.0};
      run_sweep(c);
      c.reconstructor = "phi";
      c.out = out + "/eval";
      run_eval(c);
    });
  }
  return {same, std::to_string(files) + " files compared bytewise" + (differing.empty() ? "" : ", differing:" + differing)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
  double wall_limit_s; // 0 = none
};

} // namespace

// Optional arguments select criterion ids; all run by default.
int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "operator correctness", operator_correctness, 5.0},
      {2, "spectrum correctness", spectrum_correctness, 30.0},
      {3, "pseudo-inverse accuracy", pseudo_inverse_accuracy, 0.0},
      {4, "tikhonov via cgls", tikhonov_cgls, 0.0},
      {5, "adversarial pair construction", adversarial_construction, 0.0},
      {6, "accuracy-stability trade-off", tradeoff, 0.0},
      {7, "clamped ratio below difference quotient", ratio_vs_quotient, 0.0},
      {8, "stabilizer composition bound", composition, 0.0},
      {9, "gradient checks", gradient_checks, 60.0},
      {10, "closed-form training oracle", closed_form_training, 0.0},
      {11, "approximation gap echo", approximation_echo, 0.0},
      {12, "experiment A direction", experiment_a, 0.0},
      {13, "experiment B direction", experiment_b, 0.0},
      {14, "determinism", determinism, 0.0},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  int failures = 0, ran = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.wall_limit_s > 0.0 && secs >= c.wall_limit_s) {
      o.pass = false;
      o.detail += ", over the " + fmt("%g", c.wall_limit_s) + " s limit";
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
