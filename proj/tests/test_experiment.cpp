#include "doctest.h"

#include "stablerec/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stablerec;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stablerec_exp_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 16x16 blur with a small dataset so that a full experiment runs in well under a second.
ExperimentConfig tiny(const std::string& exp, const fs::path& out) {
  ExperimentConfig c = config_from_json({{"experiment", exp},
                                         {"operator", {{"shape", {16, 16}}}},
                                         {"train_count", 6},
                                         {"test_count", 3},
                                         {"trials", 2},
                                         {"train", {{"epochs", 3}}},
                                         {"curve_delta", {0.0, 0.05}}});
  c.out = out.string();
  return c;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST_CASE("experiment defaults") {
  const ExperimentConfig a = default_config("A");
  CHECK(a.mode == std::vector<std::string>{"NN", "StNN", "ReNN", "StReNN"});
  CHECK(a.delta == std::vector<double>{0.01});
  CHECK(a.injection_delta == 0.0);
  CHECK(a.train_count == 64);
  CHECK(a.test_count == 32);
  CHECK(a.op.shape == Shape{32, 32});

  const ExperimentConfig b = default_config("B");
  CHECK(b.injection_delta == 0.025);
  CHECK(b.delta == std::vector<double>{0.075, 0.105});

  const ExperimentConfig c = default_config("C");
  CHECK(c.target_delta == 0.025);
  CHECK(c.mode == std::vector<std::string>{"ReNN", "StReNN"});
  CHECK(c.include_is);

  CHECK_THROWS_AS(default_config("D"), ParameterError);
}

TEST_CASE("config parsing") {
  const ExperimentConfig c =
      config_from_json({{"experiment", "B"}, {"delta", 0.2}, {"mode", "NN"}, {"seed", 5}, {"train", {{"optimizer", "sgd"}}}});
  CHECK(c.experiment == "B");
  CHECK(c.delta == std::vector<double>{0.2});
  CHECK(c.mode == std::vector<std::string>{"NN"});
  CHECK(c.seed == 5);
  CHECK(c.train.optimizer == OptimizerKind::SGD);
  CHECK(c.injection_delta == 0.025);

  CHECK_THROWS_AS(config_from_json({{"bogus", 1}}), ParameterError);
  CHECK_THROWS_AS(config_from_json({{"trials", "many"}}), ParameterError);
  CHECK_THROWS_AS(config_from_json({{"mode", {"XX"}}}), ParameterError);
  CHECK_THROWS_AS(config_from_json({{"operator", {{"shape", {16}}}}}), ParameterError);
  CHECK_THROWS_AS(config_from_json({{"train", {{"rate", 1}}}}), ParameterError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), ParameterError);

  // to_json round-trips every field.
  const ExperimentConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));

  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{\"trials\": ";
  try {
    load_config((dir / "bad.json").string());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() > 0);
  }
  CHECK_THROWS_AS(load_config((dir / "missing.json").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("seeds differ per experiment and are stable") {
  const ExperimentSeeds a = derive_seeds(default_config("A"));
  const ExperimentSeeds b = derive_seeds(default_config("B"));
  CHECK(a.data == b.data);
  CHECK(a.evaluation != b.evaluation);
  CHECK(a.training != b.training);
  CHECK(derive_seeds(default_config("A")).evaluation == a.evaluation);
}

TEST_CASE("gen-data writes a reproducible dataset") {
  const fs::path out = scratch("gen");
  ExperimentConfig c = tiny("A", out);
  gen_data(c);
  CHECK(fs::exists(out / "manifest.json"));
  std::size_t train = 0, test = 0;
  for (const auto& e : fs::directory_iterator(out / "train")) train += e.path().extension() == ".pgm";
  for (const auto& e : fs::directory_iterator(out / "test")) test += e.path().extension() == ".pgm";
  CHECK(train == 6);
  CHECK(test == 3);
  const std::string manifest = slurp(out / "manifest.json");
  const std::string first = slurp(out / "train" / "img_0000.pgm");
  gen_data(c);
  CHECK(slurp(out / "manifest.json") == manifest);
  CHECK(slurp(out / "train" / "img_0000.pgm") == first);

  // The manifest reproduces the synthesized signals up to 16-bit quantization.
  ExperimentConfig from_manifest = c;
  from_manifest.manifest = (out / "manifest.json").string();
  const ExperimentData m = load_experiment_data(from_manifest);
  const ExperimentData s = load_experiment_data(c);
  REQUIRE(m.train.size() == s.train.size());
  REQUIRE(m.test.size() == s.test.size());
  for (std::size_t i = 0; i < m.train.size(); ++i)
    for (std::size_t j = 0; j < m.train[i].size(); ++j) CHECK(std::abs(m.train[i][j] - s.train[i][j]) <= 0.5 / 65535 + 1e-15);

  // A regular file in the way of the output directory.
  std::ofstream(out / "blocker") << "x";
  ExperimentConfig blocked = c;
  blocked.out = (out / "blocker" / "sub").string();
  CHECK_THROWS_AS(gen_data(blocked), IoError);
  fs::remove_all(out);
}

TEST_CASE("experiment run writes the table, curve and report deterministically") {
  const fs::path out = scratch("run");
  const ExperimentConfig c = tiny("A", out);
  const ExperimentResult r = run_experiment(c);
  REQUIRE(r.columns.size() == 5);
  CHECK(r.columns.back().name == "IS");
  for (const ColumnResult& col : r.columns) {
    CHECK(col.ok);
    REQUIRE(col.reports.size() == 1);
    CHECK(col.reports[0].trials.size() == 2);
  }

  const std::string table = slurp(out / "report.csv");
  CHECK(table.rfind("metric,NN,StNN,ReNN,StReNN,IS\neta_inv,", 0) == 0);
  CHECK(table.find("\nC(delta=0.01),") != std::string::npos);
  CHECK(count_lines(table) == 3);
  const std::string curve = slurp(out / "curve.csv");
  CHECK(curve.rfind("delta,NN_mean_err,NN_max_err,", 0) == 0);
  CHECK(count_lines(curve) == 3);
  CHECK(fs::exists(out / "checkpoints" / "StReNN.bin"));
  CHECK(fs::exists(out / "checkpoints" / "NN_loss.csv"));

  const nlohmann::json report = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(report["columns"].size() == 5);
  CHECK(report["seeds"]["evaluation"] == derive_seeds(c).evaluation);

  const std::string json_text = slurp(out / "report.json");
  run_experiment(c);
  CHECK(slurp(out / "report.csv") == table);
  CHECK(slurp(out / "curve.csv") == curve);
  CHECK(slurp(out / "report.json") == json_text);
  fs::remove_all(out);
}

TEST_CASE("experiment C and single-mode runs") {
  const fs::path out = scratch("runc");
  ExperimentConfig c = tiny("C", out);
  const ExperimentResult r = run_experiment(c);
  REQUIRE(r.columns.size() == 3);
  CHECK(r.columns[0].name == "ReNN");
  CHECK(r.columns[2].name == "IS");
  CHECK(r.columns[0].reports.size() == 2);

  ExperimentConfig one = tiny("A", out);
  one.mode = {"NN"};
  one.include_is = false;
  one.trials = 1;
  const ExperimentResult s = run_experiment(one);
  REQUIRE(s.columns.size() == 1);
  REQUIRE(s.columns[0].reports.size() == 1);
  CHECK(s.columns[0].reports[0].trials.size() == 1);
  const nlohmann::json report = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(report["columns"][0]["results"][0]["report"]["trials"].size() == 1);
  fs::remove_all(out);
}

TEST_CASE("diverging modes are recorded and the run continues") {
  const fs::path out = scratch("div");
  ExperimentConfig c = tiny("A", out);
  c.mode = {"NN", "ReNN"};
  c.train.optimizer = OptimizerKind::SGD;
  c.train.learning_rate = 1e12;
  c.train.epochs = 40;
  const ExperimentResult r = run_experiment(c);
  REQUIRE(r.columns.size() == 3);
  CHECK_FALSE(r.columns[0].ok);
  CHECK_FALSE(r.columns[1].ok);
  CHECK(r.columns[2].ok);
  const std::string table = slurp(out / "report.csv");
  CHECK(table.find("eta_inv,nan,nan,") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("bounds report") {
  const fs::path out = scratch("bounds");
  ExperimentConfig c = default_config("A");
  c.out = out.string();
  c.op.type = "identity";
  c.op.shape = {8, 8};
  const nlohmann::json id = run_bounds(c);
  for (const auto& row : id["bounds"]) {
    CHECK(row["bound"].get<double>() <= 0.0);
    CHECK_FALSE(row["certified"].get<bool>());
  }

  c.op.type = "convolution";
  c.op.shape = {32, 32};
  const nlohmann::json blur = run_bounds(c);
  REQUIRE(blur["bounds"].size() == 9);
  double last = -1e300;
  for (const auto& row : blur["bounds"]) {
    CHECK(row["bound"].get<double>() >= last);
    last = row["bound"].get<double>();
  }
  CHECK(blur["certificate_threshold"].get<double>() == doctest::Approx(0.1 / 0.3));
  const std::string csv = slurp(out / "bounds.csv");
  CHECK(csv.rfind("t,sigma_t,bound,certified\n", 0) == 0);
  CHECK(count_lines(csv) == 10);

  c.t = {2000};
  CHECK_THROWS_AS(run_bounds(c), ParameterError);
  fs::remove_all(out);
}

TEST_CASE("lambda sweep") {
  const fs::path out = scratch("sweep");
  ExperimentConfig c = tiny("A", out);
  c.op.shape = {32, 32};
  c.lambda_grid = {0.01};
  const nlohmann::json one = run_sweep(c);
  CHECK(one["rows"].size() == 1);
  CHECK(count_lines(slurp(out / "sweep.csv")) == 2);

  // Heavy identity regularization: output near zero, so eta_hat approaches max ||x||.
  c.regularizer = "identity";
  c.lambda_grid = {1e6};
  const nlohmann::json big = run_sweep(c);
  const ExperimentData data = load_experiment_data(c);
  double max_norm = 0.0;
  for (const Vector& x : data.test) max_norm = std::max(max_norm, norm(x));
  CHECK(big["rows"][0]["c_hat"].get<double>() <= 0.01);
  CHECK(big["rows"][0]["eta_hat"].get<double>() == doctest::Approx(max_norm).epsilon(1e-3));

  c.lambda_grid = {1.0, 0.1};
  CHECK_THROWS_AS(run_sweep(c), ParameterError);
  fs::remove_all(out);
}

TEST_CASE("eval of saved models and baselines") {
  const fs::path out = scratch("eval");
  ExperimentConfig c = tiny("A", out);
  c.mode = {"StNN"};
  c.include_is = false;
  const ExperimentResult r = run_experiment(c);

  ExperimentConfig e = c;
  e.out = (out / "eval").string();
  e.reconstructor = "model";
  e.model_path = (out / "checkpoints" / "StNN.bin").string();
  e.stabilized = true;
  const nlohmann::json rep = run_eval(e);
  CHECK(rep["results"][0]["report"]["max_c_hat"].get<double>() == r.columns[0].reports[0].max_c_hat);
  CHECK(slurp(out / "eval" / "report.csv").rfind("delta,trial,eta_hat,c_hat,realized_eps\n", 0) == 0);

  for (const char* name : {"IS", "PI", "phi"}) {
    e.reconstructor = name;
    CHECK(run_eval(e)["results"].size() == 1);
  }
  e.reconstructor = "model";
  e.model_path.clear();
  CHECK_THROWS_AS(run_eval(e), ParameterError);
  e.reconstructor = "other";
  CHECK_THROWS_AS(run_eval(e), ParameterError);
  fs::remove_all(out);
}
