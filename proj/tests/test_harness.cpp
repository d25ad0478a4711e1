#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cauchynet/harness.hpp"

using namespace cauchynet;
namespace fs = std::filesystem;

namespace {

nlohmann::json tiny_config_json() {
  return {
      {"problem", "laplace2d-exp"}, {"layer_sizes", {2, 8, 1}}, {"iterations", 5},
      {"step", 0.01},               {"n_interior", 40},         {"n_dirichlet", 20},
      {"n_neumann", 20},            {"n_test_points", 500},     {"n_edge_points", 200},
  };
}

ExperimentConfig tiny_config() { return config_from_json(tiny_config_json()); }

// Fresh per-test scratch directory under the system temp root.
fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("cauchynet_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

bool params_equal(const NetworkParams& a, const NetworkParams& b) {
  if (a.layer_sizes != b.layer_sizes) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    for (std::size_t i = 0; i < a.weights[l].size(); ++i)
      if (a.weights[l].data()[i] != b.weights[l].data()[i]) return false;
    for (std::size_t i = 0; i < a.biases[l].size(); ++i)
      if (a.biases[l][i] != b.biases[l][i]) return false;
  }
  return true;
}

bool history_equal(const std::vector<HistoryRow>& a, const std::vector<HistoryRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].iter != b[i].iter || a[i].total != b[i].total ||
        a[i].residual != b[i].residual || a[i].dirichlet != b[i].dirichlet ||
        a[i].neumann != b[i].neumann || a[i].initial != b[i].initial)
      return false;
  return true;
}

}  // namespace

TEST_CASE("config parsing fills defaults and round-trips", "[harness]") {
  const ExperimentConfig c = tiny_config();
  CHECK(c.problem == "laplace2d-exp");
  CHECK(c.layer_sizes == std::vector<std::size_t>{2, 8, 1});
  CHECK(c.iterations == 5);
  CHECK(c.step == 0.01);
  CHECK(c.beta1 == 0.9);
  CHECK(c.beta2 == 0.999);
  CHECK(c.eps == 1e-8);
  CHECK(c.noise_delta == 0.0);
  CHECK(c.n_initial == 0);
  CHECK(c.seed_init == 1);
  CHECK(c.seed_sample == 2);
  CHECK(c.seed_noise == 3);
  CHECK(c.output_dir.empty());
  CHECK_FALSE(c.adam_legacy_form);
  CHECK_FALSE(c.loss_mean);
  CHECK(c.log_every == 1);
  CHECK_FALSE(c.periodic_checkpoints);
  CHECK(c.n_test_points == 500);
  CHECK(c.n_edge_points == 200);
  CHECK(c.variants.empty());
  CHECK_FALSE(c.override_window);
  CHECK_FALSE(c.override_horizon);

  // A config survives serialize -> parse unchanged.
  nlohmann::json full = tiny_config_json();
  full["noise_delta"] = 0.01;
  full["seed_noise"] = 77;
  full["adam_legacy_form"] = true;
  full["loss_mean"] = true;
  full["log_every"] = 3;
  full["variants"] = {{2, 6, 1}, {2, 8, 6, 1}};
  full["domain"] = {{"theta_min", 0.25}, {"theta_max", 1.5}};
  const ExperimentConfig c1 = config_from_json(full);
  const ExperimentConfig c2 = config_from_json(config_to_json(c1));
  CHECK(c2.problem == c1.problem);
  CHECK(c2.layer_sizes == c1.layer_sizes);
  CHECK(c2.noise_delta == c1.noise_delta);
  CHECK(c2.seed_noise == 77);
  CHECK(c2.adam_legacy_form);
  CHECK(c2.loss_mean);
  CHECK(c2.log_every == 3);
  CHECK(c2.variants == c1.variants);
  CHECK(c2.override_window);
  CHECK(c2.theta_min == 0.25);
  CHECK(c2.theta_max == 1.5);
}

TEST_CASE("config parsing rejects unknown keys and bad values", "[harness]") {
  auto bad = [](nlohmann::json patch) {
    nlohmann::json j = tiny_config_json();
    for (auto& [k, v] : patch.items()) j[k] = v;
    return j;
  };
  CHECK_THROWS_WITH(config_from_json(bad({{"stepsize", 0.1}})),
                    Catch::Matchers::ContainsSubstring("stepsize"));
  CHECK_THROWS_AS(config_from_json(bad({{"domain", {{"radius", 2.0}}}})),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(bad({{"problem", 7}})), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(bad({{"layer_sizes", nlohmann::json::array()}})),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(bad({{"iterations", 0}})), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(bad({{"iterations", 2.5}})), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(bad({{"step", 0.0}})), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(bad({{"step", -1.0}})), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(bad({{"noise_delta", -0.01}})), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(bad({{"log_every", 0}})), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(bad({{"n_edge_points", 0}})), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(bad({{"n_interior", -4}})), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(bad({{"seed_init", -1}})), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), std::invalid_argument);

  nlohmann::json missing = tiny_config_json();
  missing.erase("problem");
  CHECK_THROWS_AS(config_from_json(missing), std::invalid_argument);
  missing = tiny_config_json();
  missing.erase("iterations");
  CHECK_THROWS_AS(config_from_json(missing), std::invalid_argument);
}

TEST_CASE("config file loading", "[harness]") {
  const fs::path dir = scratch_dir("cfgload");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "ok.json");
    out << tiny_config_json().dump(2);
  }
  const ExperimentConfig c = load_config((dir / "ok.json").string());
  CHECK(c.problem == "laplace2d-exp");
  CHECK_THROWS_AS(load_config((dir / "missing.json").string()), std::invalid_argument);
  fs::remove_all(dir);
}

TEST_CASE("domain overrides reshape the catalogue entry", "[harness]") {
  ExperimentConfig c = tiny_config();
  c.override_window = true;
  c.theta_min = 0.5;
  c.theta_max = 2.0;
  const ProblemData prob = detail::problem_from_config(c);
  CHECK(prob.domain.gamma.theta_min == 0.5);
  CHECK(prob.domain.gamma.theta_max == 2.0);

  // The window override only fits disk domains; the horizon override only
  // fits evolution problems.
  ExperimentConfig star = c;
  star.problem = "laplace2d-star";
  CHECK_THROWS_AS(detail::problem_from_config(star), std::invalid_argument);

  ExperimentConfig heat = tiny_config();
  heat.problem = "heat2d-exp";
  heat.override_horizon = true;
  heat.time_horizon = 0.75;
  CHECK(detail::problem_from_config(heat).domain.time_horizon == 0.75);
  ExperimentConfig elliptic = tiny_config();
  elliptic.override_horizon = true;
  elliptic.time_horizon = 0.75;
  CHECK_THROWS_AS(detail::problem_from_config(elliptic), std::invalid_argument);

  // Invalid override values still go through domain validation.
  ExperimentConfig full_circle = tiny_config();
  full_circle.override_window = true;
  full_circle.theta_min = 0.0;
  full_circle.theta_max = 8.0;
  CHECK_THROWS_AS(detail::problem_from_config(full_circle), std::invalid_argument);
}

TEST_CASE("run produces a coherent history and reports", "[harness]") {
  ExperimentConfig c = tiny_config();
  c.log_every = 2;
  const RunArtifacts art = run(c);

  REQUIRE(art.history.size() == 3);  // iterations 1, 3, 5
  CHECK(art.history[0].iter == 1);
  CHECK(art.history[1].iter == 3);
  CHECK(art.history[2].iter == 5);
  for (const HistoryRow& r : art.history) {
    CHECK(r.total > 0.0);
    CHECK(r.initial == 0.0);
    CHECK_THAT(r.total, Catch::Matchers::WithinRel(r.residual + r.dirichlet + r.neumann, 1e-12));
  }
  CHECK(std::isfinite(art.final_loss));
  CHECK(art.params.layer_sizes == c.layer_sizes);
  CHECK(art.test_errors.n_points == 500);
  CHECK(art.edge_errors.n_points == 200);
  CHECK(art.test_errors.l2 > 0.0);
  CHECK(art.edge_errors.l2 > 0.0);
  CHECK_FALSE(art.test_errors.absolute);
  CHECK(art.wall_seconds > 0.0);

  // Mismatched input width is caught before any training work happens.
  ExperimentConfig wide = tiny_config();
  wide.layer_sizes = {3, 8, 1};
  CHECK_THROWS_AS(run(wide), std::invalid_argument);

  // The evolution path exercises the initial-data term.
  ExperimentConfig heat = tiny_config();
  heat.problem = "heat2d-exp";
  heat.layer_sizes = {3, 8, 1};
  heat.iterations = 3;
  heat.log_every = 1;
  heat.n_initial = 10;
  const RunArtifacts heat_art = run(heat);
  REQUIRE(heat_art.history.size() == 3);
  CHECK(heat_art.history[0].initial > 0.0);
}

TEST_CASE("run is reproducible and seed-sensitive", "[harness]") {
  const ExperimentConfig c = tiny_config();
  const RunArtifacts a = run(c);
  const RunArtifacts b = run(c);
  CHECK(history_equal(a.history, b.history));
  CHECK(params_equal(a.params, b.params));
  CHECK(a.final_loss == b.final_loss);
  CHECK(a.test_errors.l2 == b.test_errors.l2);
  CHECK(a.edge_errors.l2 == b.edge_errors.l2);

  ExperimentConfig other = c;
  other.seed_init = 99;
  const RunArtifacts d = run(other);
  CHECK_FALSE(history_equal(a.history, d.history));

  ExperimentConfig noisy = c;
  noisy.noise_delta = 0.01;
  const RunArtifacts n1 = run(noisy);
  CHECK_FALSE(history_equal(a.history, n1.history));
  const RunArtifacts n2 = run(noisy);
  CHECK(history_equal(n1.history, n2.history));
  ExperimentConfig noisy2 = noisy;
  noisy2.seed_noise = 1234;
  CHECK_FALSE(history_equal(n1.history, run(noisy2).history));
}

TEST_CASE("run results do not depend on the thread count", "[harness]") {
  const ExperimentConfig c = tiny_config();
  ::setenv("CAUCHYNET_THREADS", "1", 1);
  const RunArtifacts serial = run(c);
  ::setenv("CAUCHYNET_THREADS", "3", 1);
  const RunArtifacts threaded = run(c);
  ::unsetenv("CAUCHYNET_THREADS");
  CHECK(history_equal(serial.history, threaded.history));
  CHECK(params_equal(serial.params, threaded.params));
  CHECK(serial.final_loss == threaded.final_loss);
}

TEST_CASE("run writes the artifact set", "[harness]") {
  const fs::path dir = scratch_dir("artifacts");
  ExperimentConfig c = tiny_config();
  c.output_dir = dir.string();
  const RunArtifacts art = run(c);

  for (const char* name : {"config.json", "cost_history.csv", "params.json", "errors.json",
                           "edge_errors.csv"})
    CHECK(fs::exists(dir / name));

  // Pointwise boundary errors: one row per edge test point.
  const auto edge_rows = lines_of(slurp(dir / "edge_errors.csv"));
  REQUIRE(edge_rows.size() == 200 + 1);
  CHECK(edge_rows[0] == "x1,x2,error");
  {
    std::istringstream row(edge_rows[1]);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 3);
    const double x1 = std::stod(cells[0]), x2 = std::stod(cells[1]);
    CHECK_THAT(std::sqrt(x1 * x1 + x2 * x2), Catch::Matchers::WithinAbs(1.0, 1e-9));
    CHECK(std::isfinite(std::stod(cells[2])));
  }

  const auto csv = lines_of(slurp(dir / "cost_history.csv"));
  REQUIRE(csv.size() == art.history.size() + 1);
  CHECK(csv[0] == "iter,J,J_o,J_d,J_n,J_t");
  CHECK(csv[1].rfind("1,", 0) == 0);
  // Written doubles round-trip exactly.
  {
    std::istringstream row(csv[1]);
    std::string cell;
    std::getline(row, cell, ',');
    std::getline(row, cell, ',');
    CHECK(std::stod(cell) == art.history[0].total);
  }

  nlohmann::json saved_params;
  std::istringstream(slurp(dir / "params.json")) >> saved_params;
  CHECK(params_equal(params_from_json(saved_params), art.params));

  nlohmann::json errors;
  std::istringstream(slurp(dir / "errors.json")) >> errors;
  CHECK(errors.at("final_J").get<double>() == art.final_loss);
  CHECK(errors.at("test_l2").get<double>() == art.test_errors.l2);
  CHECK(errors.at("edge_l2").get<double>() == art.edge_errors.l2);
  CHECK(errors.at("test_points").get<std::size_t>() == 500);

  // The effective config dump parses back to the same run.
  const ExperimentConfig echoed = load_config((dir / "config.json").string());
  CHECK(echoed.problem == c.problem);
  CHECK(echoed.layer_sizes == c.layer_sizes);
  CHECK(echoed.output_dir == c.output_dir);
  fs::remove_all(dir);
}

TEST_CASE("periodic checkpoints land on the expected iterations", "[harness]") {
  const fs::path dir = scratch_dir("checkpoints");
  ExperimentConfig c = tiny_config();
  c.iterations = 25;
  c.periodic_checkpoints = true;
  c.output_dir = dir.string();
  run(c);
  CHECK(fs::exists(dir / "checkpoint_000010.json"));
  CHECK(fs::exists(dir / "checkpoint_000020.json"));
  std::size_t checkpoints = 0;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().filename().string().rfind("checkpoint_", 0) == 0) ++checkpoints;
  CHECK(checkpoints == 2);
  nlohmann::json snap;
  std::istringstream(slurp(dir / "checkpoint_000010.json")) >> snap;
  CHECK(params_from_json(snap).layer_sizes == c.layer_sizes);
  fs::remove_all(dir);
}

TEST_CASE("an exploding step reports divergence with diagnostics", "[harness]") {
  ExperimentConfig c = tiny_config();
  c.step = 1e160;
  try {
    run(c);
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    CHECK(e.iteration >= 2);
    CHECK(e.iteration <= c.iterations);
    CHECK_FALSE(std::isfinite(e.loss));
    CHECK(e.param_max > 1e100);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("diverged"));
  }
}

TEST_CASE("progress stream reports the running cost", "[harness]") {
  ExperimentConfig c = tiny_config();
  c.iterations = 3;
  std::ostringstream progress;
  run(c, &progress);
  CHECK_THAT(progress.str(), Catch::Matchers::ContainsSubstring("iter 1"));
  CHECK_THAT(progress.str(), Catch::Matchers::ContainsSubstring("J "));
}

TEST_CASE("depth width study isolates failures per variant", "[harness]") {
  const fs::path dir = scratch_dir("study");
  ExperimentConfig base = tiny_config();
  base.iterations = 3;
  base.output_dir = dir.string();
  // The middle variant has the wrong input width and must not take the
  // others down with it.
  const std::vector<std::vector<std::size_t>> variants = {
      {2, 6, 1}, {3, 6, 1}, {2, 8, 6, 1}};
  const StudyResult study = depth_width_study(base, variants);

  REQUIRE(study.variants.size() == 3);
  CHECK(study.variants[0].status == "ok");
  CHECK(study.variants[1].status == "error");
  CHECK(study.variants[2].status == "ok");
  CHECK(study.variants[0].param_count == 2 * 6 + 6 + 6 * 1 + 1);
  CHECK(study.variants[2].param_count == 2 * 8 + 8 + 8 * 6 + 6 + 6 * 1 + 1);
  CHECK(std::isfinite(study.variants[0].final_loss));
  CHECK(std::isnan(study.variants[1].final_loss));
  CHECK_FALSE(study.variants[1].detail.empty());

  const auto summary = lines_of(slurp(dir / "summary.csv"));
  REQUIRE(summary.size() == 4);
  CHECK(summary[0] == "variant,layers,params,status,final_J,test_l2,edge_l2");
  CHECK_THAT(summary[1], Catch::Matchers::ContainsSubstring("0,2x6x1,25,ok,"));
  CHECK_THAT(summary[2], Catch::Matchers::ContainsSubstring("1,3x6x1,"));
  CHECK_THAT(summary[2], Catch::Matchers::ContainsSubstring("error"));
  CHECK(fs::exists(dir / "variant_00" / "cost_history.csv"));
  CHECK(fs::exists(dir / "variant_02" / "params.json"));
  CHECK_FALSE(fs::exists(dir / "variant_01" / "params.json"));

  // A single variant is a legal (degenerate) study; zero variants are not.
  const StudyResult single = depth_width_study(base, {{2, 6, 1}});
  CHECK(single.variants.size() == 1);
  CHECK(single.variants[0].status == "ok");
  CHECK_THROWS_AS(depth_width_study(base, {}), std::invalid_argument);
  fs::remove_all(dir);

  // Variants straight from the config object.
  ExperimentConfig with_variants = tiny_config();
  with_variants.iterations = 2;
  with_variants.variants = {{2, 6, 1}};
  CHECK(depth_width_study(with_variants).variants.size() == 1);
}

TEST_CASE("a diverging variant is recorded as such", "[harness]") {
  ExperimentConfig base = tiny_config();
  base.iterations = 3;
  base.step = 1e160;
  const StudyResult study = depth_width_study(base, {{2, 6, 1}});
  REQUIRE(study.variants.size() == 1);
  CHECK(study.variants[0].status == "diverged");
  CHECK_THAT(study.variants[0].detail, Catch::Matchers::ContainsSubstring("diverged"));
}

TEST_CASE("collocation batches export to csv", "[harness]") {
  const fs::path dir = scratch_dir("batchcsv");
  fs::create_directories(dir);

  const ProblemData prob = catalogue("laplace2d-exp");
  SamplePlan plan;
  plan.n_interior = 7;
  plan.n_dirichlet = 4;
  plan.n_neumann = 3;
  plan.seed = 5;
  const CauchyBatch batch = sample(prob.domain, plan, prob.exact);
  write_batch_csv(batch, (dir / "points.csv").string());

  const auto rows = lines_of(slurp(dir / "points.csv"));
  REQUIRE(rows.size() == 1 + 7 + 4 + 3);
  CHECK(rows[0] == "x1,x2,role,n1,n2,target,observed");
  CHECK_THAT(rows[1], Catch::Matchers::ContainsSubstring(",interior,0,0,0,0"));
  CHECK_THAT(rows[8], Catch::Matchers::ContainsSubstring(",dirichlet,0,0,"));
  CHECK_THAT(rows[12], Catch::Matchers::ContainsSubstring(",neumann,"));

  // A neumann row carries a unit normal.
  {
    std::istringstream row(rows[12]);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 7);
    const double n1 = std::stod(cells[3]), n2 = std::stod(cells[4]);
    CHECK_THAT(std::sqrt(n1 * n1 + n2 * n2), Catch::Matchers::WithinAbs(1.0, 1e-12));
  }

  // Evolution batches get a time column and an initial block at t = 0.
  const ProblemData heat = catalogue("heat2d-exp");
  SamplePlan hplan;
  hplan.n_interior = 4;
  hplan.n_dirichlet = 2;
  hplan.n_neumann = 2;
  hplan.n_initial = 3;
  hplan.seed = 6;
  write_batch_csv(sample(heat.domain, hplan, heat.exact), (dir / "heat.csv").string());
  const auto hrows = lines_of(slurp(dir / "heat.csv"));
  REQUIRE(hrows.size() == 1 + 4 + 2 + 2 + 3);
  CHECK(hrows[0] == "x1,x2,t,role,n1,n2,target,observed");
  for (std::size_t i = 9; i < 12; ++i) {
    CHECK_THAT(hrows[i], Catch::Matchers::ContainsSubstring(",0,initial,"));
  }
  fs::remove_all(dir);
}
