// stablerec command-line front end.
//
// Every subcommand reads an optional JSON config (--config); flags override the
// key of the same name (dashes become underscores). Exit codes: 0 success,
// 2 invalid input or I/O failure, 1 numerical or capability failure.

#include "stablerec/experiment.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <optional>

using namespace stablerec;

namespace {

struct Overrides {
  std::string config;
  std::string experiment;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::vector<double> delta;
  std::optional<int> trials;
  std::vector<std::string> mode;
  std::optional<double> eta;
  std::optional<double> eps;
  std::vector<std::size_t> t;
  std::optional<double> lambda;
  std::vector<double> lambda_grid;
  std::optional<std::string> manifest;
  std::optional<std::string> kind;
  std::optional<std::size_t> train_count;
  std::optional<std::size_t> test_count;
  std::optional<std::string> reconstructor;
  std::optional<std::string> model_path;
  bool stabilized = false;
};

ExperimentConfig resolve(const Overrides& o) {
  nlohmann::json j = o.config.empty() ? nlohmann::json::object() : read_json_file(o.config);
  if (!j.is_object()) throw ParameterError("config must be a JSON object");
  if (!o.experiment.empty()) j["experiment"] = o.experiment;
  if (o.out) j["out"] = *o.out;
  if (o.seed) j["seed"] = *o.seed;
  if (!o.delta.empty()) j["delta"] = o.delta;
  if (o.trials) j["trials"] = *o.trials;
  if (!o.mode.empty()) j["mode"] = o.mode;
  if (o.eta) j["eta"] = *o.eta;
  if (o.eps) j["eps"] = *o.eps;
  if (!o.t.empty()) j["t"] = o.t;
  if (o.lambda) j["lambda"] = *o.lambda;
  if (!o.lambda_grid.empty()) j["lambda_grid"] = o.lambda_grid;
  if (o.manifest) j["manifest"] = *o.manifest;
  if (o.kind) j["kind"] = *o.kind;
  if (o.train_count) j["train_count"] = *o.train_count;
  if (o.test_count) j["test_count"] = *o.test_count;
  if (o.reconstructor) j["reconstructor"] = *o.reconstructor;
  if (o.model_path) j["model_path"] = *o.model_path;
  if (o.stabilized) j["stabilized"] = true;
  return config_from_json(j);
}

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON configuration file");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--seed", o.seed, "base seed");
  sub->add_option("--manifest", o.manifest, "dataset manifest written by gen-data");
  sub->add_option("--kind", o.kind, "synthetic image family (blobs, checker, random_phantom)");
  sub->add_option("--train-count", o.train_count, "number of training images");
  sub->add_option("--test-count", o.test_count, "number of test images");
}

void add_eval_flags(CLI::App* sub, Overrides& o) {
  sub->add_option("--delta", o.delta, "evaluation noise level (repeatable)")->take_all();
  sub->add_option("--trials", o.trials, "number of noise trials T");
  sub->add_option("--lambda", o.lambda, "Tikhonov weight");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable learned reconstruction toolkit"};
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("gen-data", "synthesize train/test PGMs, degraded observations and a manifest");
  add_common(gen, o);
  gen->add_option("--delta", o.delta, "noise level of the degraded observations")->take_all();

  auto* exp = app.add_subcommand("experiment", "train and evaluate one experiment table");
  exp->add_option("experiment", o.experiment, "A, B or C")->check(CLI::IsMember({"A", "B", "C"}));
  add_common(exp, o);
  add_eval_flags(exp, o);
  exp->add_option("--mode", o.mode, "training mode(s): NN, StNN, ReNN, StReNN")->take_all();

  auto* bounds = app.add_subcommand("bounds", "singular spectrum and Lipschitz lower bounds");
  add_common(bounds, o);
  bounds->add_option("--eta", o.eta, "accuracy level eta");
  bounds->add_option("--eps", o.eps, "perturbation radius eps");
  bounds->add_option("--t", o.t, "spectral index (repeatable, 1-based)")->take_all();

  auto* sweep = app.add_subcommand("sweep-lambda", "accuracy/stability of Tikhonov across lambda");
  add_common(sweep, o);
  sweep->add_option("--delta", o.delta, "evaluation noise level")->take_all();
  sweep->add_option("--trials", o.trials, "number of noise trials T");
  sweep->add_option("--lambda-grid", o.lambda_grid, "ascending lambda values")->take_all();

  auto* eval = app.add_subcommand("eval", "evaluate one reconstructor");
  add_common(eval, o);
  add_eval_flags(eval, o);
  eval->add_option("--reconstructor", o.reconstructor, "IS, PI, phi or model");
  eval->add_option("--model-path", o.model_path, "checkpoint for reconstructor=model");
  eval->add_flag("--stabilized", o.stabilized, "compose the model with phi_k");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig config = resolve(o);
    if (*gen) {
      gen_data(config);
      std::cout << "wrote " << config.train_count << " train and " << config.test_count << " test images to "
                << config.out << "\n";
    } else if (*exp) {
      const ExperimentResult result = run_experiment(config);
      write_table_csv(result, config.delta, std::cout);
      int failed = 0;
      for (const ColumnResult& col : result.columns)
        if (!col.ok) {
          std::cerr << col.name << ": " << col.error << "\n";
          ++failed;
        }
      if (failed) std::cerr << failed << " column(s) diverged; recorded as nan\n";
    } else if (*bounds) {
      std::cout << run_bounds(config).dump(2) << "\n";
    } else if (*sweep) {
      std::cout << run_sweep(config).dump(2) << "\n";
    } else if (*eval) {
      const nlohmann::json report = run_eval(config);
      for (const auto& r : report["results"])
        std::cout << "delta=" << format_number(r["delta"].get<double>())
                  << " eta_hat=" << format_number(r["report"]["max_eta_hat"].get<double>())
                  << " C=" << format_number(r["report"]["max_c_hat"].get<double>()) << "\n";
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ParameterError& e) {
    std::cerr << "invalid parameter: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "invalid JSON: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
