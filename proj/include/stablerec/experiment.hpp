#ifndef STABLEREC_EXPERIMENT_HPP
#define STABLEREC_EXPERIMENT_HPP

#include "stablerec/data.hpp"
#include "stablerec/learned.hpp"
#include "stablerec/stability.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace stablerec {

/// Everything the CLI subcommands consume. JSON keys share the field names
/// (see to_json); omitted keys keep the per-experiment defaults.
struct ExperimentConfig {
  std::string experiment = "A"; // A | B | C
  OperatorDescriptor op;        // forward operator (shape lives here)
  std::string regularizer = "gradient"; // gradient | periodic_gradient | identity
  double lambda = 1e-2;
  int k = 3;
  double tol_f = 1e-6;
  double tol_x = 1e-6;
  int max_iters = 1000;

  // Dataset.
  std::string kind = "blobs";
  std::size_t train_count = 64;
  std::size_t test_count = 32;
  std::string manifest; // when set, images are read from this gen-data manifest

  // Training.
  std::string model = "filter"; // filter | convnet
  TrainConfig train;            // learning rate, epochs, batch, optimizer, lr_decay
  double injection_delta = 0.0; // noise injection level
  double target_delta = 0.0;    // noisy-target level
  std::vector<std::string> mode;
  bool include_is = true;

  // Evaluation.
  std::vector<double> delta;       // evaluation noise levels
  std::vector<double> curve_delta; // error-curve grid
  int trials = 20;
  std::uint64_t seed = 2024;

  // bounds / sweep-lambda / eval.
  double eta = 0.1;
  double eps = 0.1;
  std::vector<std::size_t> t;          // empty: spectrum deciles
  std::vector<double> lambda_grid;     // sweep-lambda grid
  std::string reconstructor = "IS";    // eval: IS | PI | phi | model
  std::string model_path;              // eval: checkpoint to load
  bool stabilized = false;             // eval: wrap the model with phi_k

  std::string out = "out";
};

/// Defaults for experiment A, B or C.
ExperimentConfig default_config(const std::string& experiment);
/// Starts from default_config(j["experiment"]) and applies every key; unknown
/// keys raise ParameterError.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);
/// Parsed JSON document; IoError when unreadable, ParseError with the byte offset when malformed.
nlohmann::json read_json_file(const std::string& path);

/// Seeds derived from config.seed; distinct per experiment letter.
struct ExperimentSeeds {
  std::uint64_t data = 0;
  std::uint64_t split = 0;
  std::uint64_t target_noise = 0;
  std::uint64_t training = 0;
  std::uint64_t evaluation = 0;
  std::uint64_t curve = 0;
};
ExperimentSeeds derive_seeds(const ExperimentConfig& config);

OperatorPtr build_regularizer(const ExperimentConfig& config);
TikhonovConfig tikhonov_config(const ExperimentConfig& config);

struct ExperimentData {
  std::vector<Vector> train;
  std::vector<Vector> test;
};

/// Synthesizes (or loads from the manifest) normalized train/test signals.
ExperimentData load_experiment_data(const ExperimentConfig& config);

/// Writes train/ and test/ ground-truth PGMs, degraded/ test observations and manifest.json.
void gen_data(const ExperimentConfig& config);

struct ColumnResult {
  std::string name;
  bool ok = true;
  std::string error;
  double eta_hat = 0.0;
  std::vector<StabilityReport> reports; // one per evaluation delta
  Vector loss_curve;
};

struct ExperimentResult {
  std::vector<ColumnResult> columns;
  ErrorCurve curve;
};

/// Trains the mode set, evaluates every column and writes report.csv,
/// curve.csv, report.json and checkpoints/ under config.out.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Table orientation: one column per reconstructor, rows eta_inv and C per delta.
void write_table_csv(const ExperimentResult& result, const std::vector<double>& deltas, std::ostream& out);

/// Spectrum summary and per-t Lipschitz lower bounds; writes bounds.csv.
nlohmann::json run_bounds(const ExperimentConfig& config);

/// eta_hat and C of the Tikhonov reconstructor per lambda; writes sweep.csv.
nlohmann::json run_sweep(const ExperimentConfig& config);

/// Evaluates one reconstructor (IS, PI, phi or a saved model); writes report.csv and report.json.
nlohmann::json run_eval(const ExperimentConfig& config);

} // namespace stablerec

#endif
