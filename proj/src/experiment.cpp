#include "stablerec/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace stablerec {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  c.train.epochs = 50;
  c.train.learning_rate = 0.1;
  c.train.batch_size = 8;
  c.train.optimizer = OptimizerKind::Adam;
  c.curve_delta = {0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1};
  c.lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e2, 1e4, 1e6};
  if (experiment == "A") {
    c.mode = {"NN", "StNN", "ReNN", "StReNN"};
    c.delta = {0.01};
  } else if (experiment == "B") {
    c.mode = {"NN", "StNN", "ReNN", "StReNN"};
    c.injection_delta = 0.025;
    c.delta = {0.075, 0.105};
  } else if (experiment == "C") {
    c.mode = {"ReNN", "StReNN"};
    c.target_delta = 0.025;
    c.delta = {0.075, 0.105};
  } else {
    throw ParameterError("experiment must be A, B or C (got '" + experiment + "')");
  }
  return c;
}

namespace {

template <typename T> T get_as(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParameterError("config key '" + key + "' has the wrong type");
  }
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam" || s == "Adam") return OptimizerKind::Adam;
  if (s == "sgd" || s == "SGD") return OptimizerKind::SGD;
  throw ParameterError("optimizer must be adam or sgd");
}

void apply_operator(OperatorDescriptor& d, const nlohmann::json& j) {
  if (!j.is_object()) throw ParameterError("config key 'operator' must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "type") d.type = get_as<std::string>(v, key);
    else if (key == "shape") {
      const auto dims = get_as<std::vector<std::size_t>>(v, key);
      if (dims.size() != 2) throw ParameterError("operator.shape must be [height, width]");
      d.shape = {dims[0], dims[1]};
    } else if (key == "radius") d.radius = get_as<int>(v, key);
    else if (key == "sigma") d.sigma = get_as<double>(v, key);
    else if (key == "normalized") d.normalized = get_as<bool>(v, key);
    else throw ParameterError("unknown config key 'operator." + key + "'");
  }
}

void apply_train(TrainConfig& t, const nlohmann::json& j) {
  if (!j.is_object()) throw ParameterError("config key 'train' must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "epochs") t.epochs = get_as<int>(v, key);
    else if (key == "learning_rate") t.learning_rate = get_as<double>(v, key);
    else if (key == "batch_size") t.batch_size = get_as<int>(v, key);
    else if (key == "optimizer") t.optimizer = parse_optimizer(get_as<std::string>(v, key));
    else if (key == "lr_decay") t.lr_decay = get_as<double>(v, key);
    else if (key == "checkpoint_epochs") t.checkpoint_epochs = get_as<std::vector<int>>(v, key);
    else throw ParameterError("unknown config key 'train." + key + "'");
  }
}

// Accepts either a scalar or an array for list-valued keys.
template <typename T> std::vector<T> get_list(const nlohmann::json& v, const std::string& key) {
  if (v.is_array()) return get_as<std::vector<T>>(v, key);
  return {get_as<T>(v, key)};
}

void check_config(const ExperimentConfig& c) {
  if (c.k < 1) throw ParameterError("k must be at least 1");
  if (c.trials < 1) throw ParameterError("trials must be at least 1");
  if (c.train_count < 1 || c.test_count < 1) throw ParameterError("train_count and test_count must be positive");
  if (c.model != "filter" && c.model != "convnet") throw ParameterError("model must be filter or convnet");
  if (c.injection_delta < 0.0 || c.target_delta < 0.0) throw ParameterError("noise levels must be non-negative");
  if (c.eta < 0.0 || !(c.eps > 0.0)) throw ParameterError("eta must be non-negative and eps positive");
  for (double d : c.delta)
    if (!(d > 0.0)) throw ParameterError("evaluation deltas must be positive");
  for (const std::string& m : c.mode) parse_train_mode(m);
  parse_synth_kind(c.kind);
  validate(c.train);
  TikhonovConfig t;
  t.lambda = c.lambda;
  t.tol_f = c.tol_f;
  t.tol_x = c.tol_x;
  t.max_iters = c.max_iters;
  validate(t);
}

} // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParameterError("config must be a JSON object");
  ExperimentConfig c = default_config(j.contains("experiment") ? get_as<std::string>(j["experiment"], "experiment") : "A");
  for (const auto& [key, v] : j.items()) {
    if (key == "experiment") continue;
    else if (key == "operator") apply_operator(c.op, v);
    else if (key == "regularizer") c.regularizer = get_as<std::string>(v, key);
    else if (key == "lambda") c.lambda = get_as<double>(v, key);
    else if (key == "k") c.k = get_as<int>(v, key);
    else if (key == "tol_f") c.tol_f = get_as<double>(v, key);
    else if (key == "tol_x") c.tol_x = get_as<double>(v, key);
    else if (key == "max_iters") c.max_iters = get_as<int>(v, key);
    else if (key == "kind") c.kind = get_as<std::string>(v, key);
    else if (key == "train_count") c.train_count = get_as<std::size_t>(v, key);
    else if (key == "test_count") c.test_count = get_as<std::size_t>(v, key);
    else if (key == "manifest") c.manifest = get_as<std::string>(v, key);
    else if (key == "model") c.model = get_as<std::string>(v, key);
    else if (key == "train") apply_train(c.train, v);
    else if (key == "injection_delta") c.injection_delta = get_as<double>(v, key);
    else if (key == "target_delta") c.target_delta = get_as<double>(v, key);
    else if (key == "mode") c.mode = get_list<std::string>(v, key);
    else if (key == "include_is") c.include_is = get_as<bool>(v, key);
    else if (key == "delta") c.delta = get_list<double>(v, key);
    else if (key == "curve_delta") c.curve_delta = get_list<double>(v, key);
    else if (key == "trials") c.trials = get_as<int>(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else if (key == "eta") c.eta = get_as<double>(v, key);
    else if (key == "eps") c.eps = get_as<double>(v, key);
    else if (key == "t") c.t = get_list<std::size_t>(v, key);
    else if (key == "lambda_grid") c.lambda_grid = get_list<double>(v, key);
    else if (key == "reconstructor") c.reconstructor = get_as<std::string>(v, key);
    else if (key == "model_path") c.model_path = get_as<std::string>(v, key);
    else if (key == "stabilized") c.stabilized = get_as<bool>(v, key);
    else if (key == "out") c.out = get_as<std::string>(v, key);
    else throw ParameterError("unknown config key '" + key + "'");
  }
  check_config(c);
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"experiment", c.experiment},
          {"operator",
           {{"type", c.op.type},
            {"shape", {c.op.shape.height, c.op.shape.width}},
            {"radius", c.op.radius},
            {"sigma", c.op.sigma},
            {"normalized", c.op.normalized}}},
          {"regularizer", c.regularizer},
          {"lambda", c.lambda},
          {"k", c.k},
          {"tol_f", c.tol_f},
          {"tol_x", c.tol_x},
          {"max_iters", c.max_iters},
          {"kind", c.kind},
          {"train_count", c.train_count},
          {"test_count", c.test_count},
          {"manifest", c.manifest},
          {"model", c.model},
          {"train",
           {{"epochs", c.train.epochs},
            {"learning_rate", c.train.learning_rate},
            {"batch_size", c.train.batch_size},
            {"optimizer", c.train.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
            {"lr_decay", c.train.lr_decay},
            {"checkpoint_epochs", c.train.checkpoint_epochs}}},
          {"injection_delta", c.injection_delta},
          {"target_delta", c.target_delta},
          {"mode", c.mode},
          {"include_is", c.include_is},
          {"delta", c.delta},
          {"curve_delta", c.curve_delta},
          {"trials", c.trials},
          {"seed", c.seed},
          {"eta", c.eta},
          {"eps", c.eps},
          {"t", c.t},
          {"lambda_grid", c.lambda_grid},
          {"reconstructor", c.reconstructor},
          {"model_path", c.model_path},
          {"stabilized", c.stabilized},
          {"out", c.out}};
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what(), e.byte);
  }
}

ExperimentConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

ExperimentSeeds derive_seeds(const ExperimentConfig& c) {
  const auto letter = static_cast<std::uint64_t>(c.experiment.empty() ? 'A' : c.experiment[0]);
  ExperimentSeeds s;
  s.data = derive_seed(c.seed, 1);
  s.split = derive_seed(c.seed, 2);
  s.training = derive_seed(c.seed, 3, letter);
  s.target_noise = derive_seed(c.seed, 4, letter);
  s.evaluation = derive_seed(c.seed, 5, letter);
  s.curve = derive_seed(c.seed, 6, letter);
  return s;
}

OperatorPtr build_regularizer(const ExperimentConfig& c) {
  if (c.regularizer == "gradient") return std::make_shared<GradientOperator>(c.op.shape);
  if (c.regularizer == "periodic_gradient") return build_convolution_operator(c.op.shape, second_difference_stencil());
  if (c.regularizer == "identity") return std::make_shared<IdentityOperator>(c.op.shape.size());
  throw ParameterError("regularizer must be gradient, periodic_gradient or identity");
}

TikhonovConfig tikhonov_config(const ExperimentConfig& c) {
  TikhonovConfig t;
  t.lambda = c.lambda;
  t.regularizer = build_regularizer(c);
  t.tol_f = c.tol_f;
  t.tol_x = c.tol_x;
  t.max_iters = c.max_iters;
  return t;
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

namespace {

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw IoError("cannot create directory '" + p.string() + "': " + ec.message());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + p.string() + "'");
}

std::string image_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img_%04zu.pgm", i);
  return buf;
}

DatasetSplit synthesize_split(const ExperimentConfig& c) {
  const ExperimentSeeds seeds = derive_seeds(c);
  std::vector<GrayImage> images =
      synthesize_images(c.train_count + c.test_count, c.op.shape, parse_synth_kind(c.kind), seeds.data);
  for (GrayImage& img : images) img = normalize(img);
  return split_dataset(std::move(images), c.train_count, c.test_count, seeds.split);
}

} // namespace

ExperimentData load_experiment_data(const ExperimentConfig& c) {
  ExperimentData data;
  if (c.manifest.empty()) {
    const DatasetSplit split = synthesize_split(c);
    data.train = signals_of(split.train);
    data.test = signals_of(split.test);
    return data;
  }
  const nlohmann::json m = read_json_file(c.manifest);
  const fs::path base = fs::path(c.manifest).parent_path();
  if (!m.contains("images") || !m["images"].is_array()) throw ParameterError("manifest lacks an 'images' array");
  for (const auto& entry : m["images"]) {
    const std::string path = get_as<std::string>(entry.at("path"), "images.path");
    const std::string split = get_as<std::string>(entry.at("split"), "images.split");
    GrayImage img = load_pgm((base / path).string());
    if (img.shape != c.op.shape) throw ShapeError("manifest image '" + path + "' does not match the operator grid");
    (split == "train" ? data.train : data.test).push_back(std::move(img.pixels));
  }
  if (data.train.empty() || data.test.empty()) throw ParameterError("manifest must list train and test images");
  return data;
}

void gen_data(const ExperimentConfig& c) {
  const fs::path out(c.out);
  ensure_dir(out);
  ensure_dir(out / "train");
  ensure_dir(out / "test");
  ensure_dir(out / "degraded");
  const ExperimentSeeds seeds = derive_seeds(c);
  const DatasetSplit split = synthesize_split(c);

  nlohmann::json images = nlohmann::json::array();
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    const std::string rel = "train/" + image_name(i);
    save_pgm(split.train[i], (out / rel).string(), 65535);
    images.push_back({{"path", rel}, {"split", "train"}});
  }
  const double delta = c.delta.empty() ? 0.0 : c.delta.front();
  nlohmann::json degraded = nlohmann::json::array();
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    const std::string rel = "test/" + image_name(i);
    save_pgm(split.test[i], (out / rel).string(), 65535);
    images.push_back({{"path", rel}, {"split", "test"}});

    DegradationConfig dc{c.op.radius, c.op.sigma, c.op.normalized, delta, derive_seed(seeds.evaluation, i)};
    // PGM holds [0, 1]; observations are clipped on export only.
    const std::string drel = "degraded/" + image_name(i);
    save_pgm(make_image(c.op.shape, degrade(split.test[i], dc)), (out / drel).string(), 65535);
    degraded.push_back(drel);
  }

  nlohmann::json manifest = {
      {"images", images},
      {"split_seed", split.seed},
      {"synth", {{"kind", c.kind}, {"shape", {c.op.shape.height, c.op.shape.width}}, {"seed", seeds.data}}},
      {"degradation",
       {{"radius", c.op.radius}, {"sigma", c.op.sigma}, {"normalized", c.op.normalized}, {"delta", delta},
        {"seed", seeds.evaluation}, {"files", degraded}}}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

void write_table_csv(const ExperimentResult& result, const std::vector<double>& deltas, std::ostream& out) {
  out << "metric";
  for (const ColumnResult& col : result.columns) out << ',' << col.name;
  out << '\n';
  const double nan = std::nan("");
  out << "eta_inv";
  for (const ColumnResult& col : result.columns)
    out << ',' << format_number(col.ok ? (col.eta_hat > 0.0 ? 1.0 / col.eta_hat : kInfiniteRadius) : nan);
  out << '\n';
  for (std::size_t d = 0; d < deltas.size(); ++d) {
    out << "C(delta=" << format_number(deltas[d]) << ')';
    for (const ColumnResult& col : result.columns) out << ',' << format_number(col.ok ? col.reports[d].max_c_hat : nan);
    out << '\n';
  }
}

namespace {

nlohmann::json seeds_json(const ExperimentSeeds& s) {
  return {{"data", s.data},         {"split", s.split},           {"training", s.training},
          {"target_noise", s.target_noise}, {"evaluation", s.evaluation}, {"curve", s.curve}};
}

std::unique_ptr<Model> make_model(const ExperimentConfig& c, std::uint64_t seed) {
  if (c.model == "convnet") return std::make_unique<ConvNetModel>(c.op.shape, std::vector<std::uint32_t>{1, 8, 8, 1}, true, seed);
  return std::make_unique<LinearFourierFilter>(c.op.shape, Complex(1.0));
}

void evaluate_column(ColumnResult& col, const Reconstructor& psi, const LinearOperator& op,
                     const std::vector<Vector>& test, const ExperimentConfig& c, std::uint64_t eval_seed) {
  for (double delta : c.delta) {
    col.reports.push_back(repeated_stability(psi, op, test, eval_seed, delta, c.trials));
    col.eta_hat = col.reports.back().max_eta_hat;
  }
  if (c.delta.empty()) col.eta_hat = empirical_accuracy(psi, op, test);
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& c) {
  check_config(c);
  const fs::path out(c.out);
  ensure_dir(out);
  ensure_dir(out / "checkpoints");

  const ExperimentSeeds seeds = derive_seeds(c);
  const OperatorPtr op = build_operator(c.op);
  const TikhonovConfig tik = tikhonov_config(c);
  const ExperimentData data = load_experiment_data(c);
  const auto phi = stabilizer(op, StabilizerSpec{c.k, tik});

  ExperimentResult result;
  std::vector<NamedReconstructor> curve_members;
  for (std::size_t mi = 0; mi < c.mode.size(); ++mi) {
    const TrainMode mode = parse_train_mode(c.mode[mi]);
    ColumnResult col;
    col.name = c.mode[mi];
    try {
      const DatasetPairs pairs =
          build_dataset(data.train, op, mode, &tik, c.k, 0.0, c.target_delta, seeds.target_noise);
      TrainConfig tc = c.train;
      tc.seed = derive_seed(seeds.training, mi);
      tc.noise_injection_delta = c.injection_delta;
      tc.noisy_target_delta = c.target_delta;
      const std::unique_ptr<Model> init = make_model(c, tc.seed);
      TrainResult trained = train(*init, pairs, tc);
      col.loss_curve = trained.loss_curve;

      const fs::path model_path = out / "checkpoints" / (col.name + ".bin");
      save_model(*trained.model, model_path.string());
      std::ostringstream loss_csv;
      write_loss_curve_csv(trained.loss_curve, loss_csv);
      write_text(out / "checkpoints" / (col.name + "_loss.csv"), loss_csv.str());

      const bool stabilized = mode == TrainMode::StNN || mode == TrainMode::StReNN;
      std::shared_ptr<const Model> model = std::move(trained.model);
      const ReconstructorPtr psi = as_reconstructor(model, stabilized ? phi : nullptr);
      evaluate_column(col, *psi, *op, data.test, c, seeds.evaluation);
      curve_members.push_back({col.name, psi});
    } catch (const NumericalError& e) {
      col.ok = false;
      col.error = e.what();
      col.reports.clear();
    }
    result.columns.push_back(std::move(col));
  }

  if (c.include_is) {
    ColumnResult col;
    col.name = "IS";
    const auto is = tikhonov(op, tik);
    try {
      evaluate_column(col, *is, *op, data.test, c, seeds.evaluation);
      curve_members.push_back({"IS", is});
    } catch (const NumericalError& e) {
      col.ok = false;
      col.error = e.what();
      col.reports.clear();
    }
    result.columns.push_back(std::move(col));
  }

  result.curve = error_curve(curve_members, *op, data.test, c.curve_delta, seeds.curve);

  std::ostringstream table, curve;
  write_table_csv(result, c.delta, table);
  write_error_curve_csv(result.curve, curve);
  write_text(out / "report.csv", table.str());
  write_text(out / "curve.csv", curve.str());

  nlohmann::json columns = nlohmann::json::array();
  for (const ColumnResult& col : result.columns) {
    nlohmann::json per_delta = nlohmann::json::array();
    for (std::size_t d = 0; d < col.reports.size(); ++d)
      per_delta.push_back({{"delta", c.delta[d]}, {"report", to_json(col.reports[d])}});
    columns.push_back({{"name", col.name},
                       {"ok", col.ok},
                       {"error", col.error},
                       {"eta_hat", col.eta_hat},
                       {"final_loss", col.loss_curve.empty() ? 0.0 : col.loss_curve.back()},
                       {"results", per_delta}});
  }
  const nlohmann::json report = {{"config", to_json(c)}, {"seeds", seeds_json(seeds)}, {"columns", columns}};
  write_text(out / "report.json", report.dump(2) + "\n");
  return result;
}

nlohmann::json run_bounds(const ExperimentConfig& c) {
  const OperatorPtr op = build_operator(c.op);
  const SpectralDecomposition spec = spectral_decomposition(*op);
  const Vector& sigma = spec.singular_values();
  const std::size_t n = sigma.size();

  std::vector<std::size_t> ts = c.t;
  if (ts.empty()) {
    for (std::size_t j = 1; j <= 9; ++j) ts.push_back(std::max<std::size_t>(1, (n * j + 5) / 10));
  }
  const double threshold = c.eta / (c.eps + 2.0 * c.eta);

  std::ostringstream csv;
  csv << "t,sigma_t,bound,certified\n";
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t : ts) {
    if (t < 1 || t > n) throw ParameterError("t must lie in 1.." + std::to_string(n));
    const double st = sigma[t - 1];
    if (!(st > 0.0)) throw DegenerateSpectrumError("sigma_t is zero at t=" + std::to_string(t), static_cast<long>(t));
    const LipschitzLowerBound b = lipschitz_lower_bound(st, c.eta, c.eps);
    csv << t << ',' << format_number(st) << ',' << format_number(b.bound) << ',' << (b.certified ? 1 : 0) << '\n';
    rows.push_back({{"t", t}, {"sigma_t", st}, {"bound", b.bound}, {"certified", b.certified}});
  }
  const fs::path out(c.out);
  ensure_dir(out);
  write_text(out / "bounds.csv", csv.str());

  const nlohmann::json summary = {{"n", n},
                                  {"sigma_max", sigma.front()},
                                  {"sigma_min", sigma.back()},
                                  {"condition_number", sigma.back() > 0.0 ? sigma.front() / sigma.back() : kInfiniteRadius},
                                  {"eta", c.eta},
                                  {"eps", c.eps},
                                  {"certificate_threshold", threshold},
                                  {"bounds", rows}};
  write_text(out / "bounds.json", summary.dump(2) + "\n");
  return summary;
}

nlohmann::json run_sweep(const ExperimentConfig& c) {
  if (c.lambda_grid.empty()) throw ParameterError("lambda_grid must not be empty");
  for (std::size_t i = 1; i < c.lambda_grid.size(); ++i)
    if (!(c.lambda_grid[i] > c.lambda_grid[i - 1])) throw ParameterError("lambda_grid must be ascending");
  if (c.delta.empty()) throw ParameterError("sweep-lambda needs an evaluation delta");

  const OperatorPtr op = build_operator(c.op);
  const ExperimentData data = load_experiment_data(c);
  const ExperimentSeeds seeds = derive_seeds(c);
  const double delta = c.delta.front();

  std::ostringstream csv;
  csv << "lambda,eta_hat,c_hat\n";
  nlohmann::json rows = nlohmann::json::array();
  for (double lambda : c.lambda_grid) {
    ExperimentConfig cl = c;
    cl.lambda = lambda;
    const auto is = tikhonov(op, tikhonov_config(cl));
    const StabilityReport r = repeated_stability(*is, *op, data.test, seeds.evaluation, delta, c.trials);
    csv << format_number(lambda) << ',' << format_number(r.max_eta_hat) << ',' << format_number(r.max_c_hat) << '\n';
    rows.push_back({{"lambda", lambda}, {"eta_hat", r.max_eta_hat}, {"c_hat", r.max_c_hat}});
  }
  const fs::path out(c.out);
  ensure_dir(out);
  write_text(out / "sweep.csv", csv.str());
  return {{"delta", delta}, {"rows", rows}};
}

nlohmann::json run_eval(const ExperimentConfig& c) {
  if (c.delta.empty()) throw ParameterError("eval needs at least one delta");
  const OperatorPtr op = build_operator(c.op);
  const TikhonovConfig tik = tikhonov_config(c);
  const ExperimentData data = load_experiment_data(c);
  const ExperimentSeeds seeds = derive_seeds(c);

  ReconstructorPtr psi;
  if (c.reconstructor == "IS") {
    psi = tikhonov(op, tik);
  } else if (c.reconstructor == "PI") {
    psi = pseudo_inverse(op);
  } else if (c.reconstructor == "phi") {
    psi = stabilizer(op, StabilizerSpec{c.k, tik});
  } else if (c.reconstructor == "model") {
    if (c.model_path.empty()) throw ParameterError("eval with reconstructor=model needs model_path");
    std::shared_ptr<const Model> model = load_model(c.model_path);
    psi = as_reconstructor(model, c.stabilized ? stabilizer(op, StabilizerSpec{c.k, tik}) : nullptr);
  } else {
    throw ParameterError("reconstructor must be IS, PI, phi or model");
  }

  std::ostringstream csv;
  csv << "delta,trial,eta_hat,c_hat,realized_eps\n";
  nlohmann::json results = nlohmann::json::array();
  for (double delta : c.delta) {
    const StabilityReport r = repeated_stability(*psi, *op, data.test, seeds.evaluation, delta, c.trials);
    for (const TrialReport& t : r.trials)
      csv << format_number(delta) << ',' << t.trial_index << ',' << format_number(t.eta_hat) << ','
          << format_number(t.c_hat) << ',' << format_number(t.realized_eps) << '\n';
    results.push_back({{"delta", delta}, {"report", to_json(r)}});
  }
  const fs::path out(c.out);
  ensure_dir(out);
  write_text(out / "report.csv", csv.str());
  const nlohmann::json report = {{"config", to_json(c)},
                                 {"seeds", seeds_json(seeds)},
                                 {"reconstructor", psi->describe()},
                                 {"results", results}};
  write_text(out / "report.json", report.dump(2) + "\n");
  return report;
}

} // namespace stablerec
