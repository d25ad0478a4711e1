// Command-line front end.
//
//   cauchynet run <config.json>       train one configuration
//   cauchynet study <config.json>     train every layer variant in the config
//   cauchynet sample <config.json>    draw the collocation batch as CSV
//   cauchynet check-gradients         finite-difference audit of the analytic
//                                     derivatives and parameter gradients

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cauchynet/gradcheck.hpp"
#include "cauchynet/harness.hpp"

namespace {

using namespace cauchynet;

int cmd_run(const std::string& config_path, const std::string& out_override,
            bool quiet) {
  ExperimentConfig cfg = load_config(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  const RunArtifacts art = run(cfg, quiet ? nullptr : &std::cout);
  std::printf("final J        %.6g\n", art.final_loss);
  std::printf("test rel. L2   %.6g%s\n", art.test_errors.l2,
              art.test_errors.absolute ? "  (absolute: zero reference)" : "");
  std::printf("edge rel. L2   %.6g%s\n", art.edge_errors.l2,
              art.edge_errors.absolute ? "  (absolute: zero reference)" : "");
  std::printf("wall time      %.1f s\n", art.wall_seconds);
  if (!cfg.output_dir.empty())
    std::printf("artifacts in   %s\n", cfg.output_dir.c_str());
  return 0;
}

int cmd_study(const std::string& config_path, const std::string& out_override,
              bool quiet) {
  ExperimentConfig cfg = load_config(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  if (cfg.variants.empty()) {
    std::fprintf(stderr, "study: config has no 'variants' array\n");
    return 1;
  }
  const StudyResult study = depth_width_study(cfg, quiet ? nullptr : &std::cout);
  std::printf("%-8s %-22s %10s %-9s %12s %12s %12s\n", "variant", "layers", "params",
              "status", "final_J", "test_l2", "edge_l2");
  bool all_ok = true;
  for (std::size_t i = 0; i < study.variants.size(); ++i) {
    const VariantResult& v = study.variants[i];
    std::printf("%-8zu %-22s %10zu %-9s %12.5g %12.5g %12.5g\n", i,
                layers_label(v.layers).c_str(), v.param_count, v.status.c_str(),
                v.final_loss, v.test_l2, v.edge_l2);
    if (v.status != "ok") {
      all_ok = false;
      std::printf("         ^ %s\n", v.detail.c_str());
    }
  }
  if (!cfg.output_dir.empty())
    std::printf("summary in     %s/summary.csv\n", cfg.output_dir.c_str());
  return all_ok ? 0 : 1;
}

int cmd_sample(const std::string& config_path, const std::string& out_path) {
  const ExperimentConfig cfg = load_config(config_path);
  const ProblemData prob = detail::problem_from_config(cfg);
  SamplePlan plan;
  plan.n_interior = cfg.n_interior;
  plan.n_dirichlet = cfg.n_dirichlet;
  plan.n_neumann = cfg.n_neumann;
  plan.n_initial = cfg.n_initial;
  plan.seed = cfg.seed_sample;
  const CauchyBatch batch =
      apply_noise(sample(prob.domain, plan, prob.exact), {cfg.noise_delta, cfg.seed_noise});
  write_batch_csv(batch, out_path);
  std::printf("wrote %zu interior, %zu dirichlet, %zu neumann, %zu initial points to %s\n",
              batch.interior.size(), batch.dirichlet.size(), batch.neumann.size(),
              batch.initial.size(), out_path.c_str());
  return 0;
}

// Compares the forward jet (gradient and second derivatives) and the loss
// parameter gradients against central differences on freshly drawn nets and
// batches. A mismatch ratio is |analytic - reference| over the mixed
// tolerance; anything at or above 1 is a failure.
int cmd_check_gradients(std::vector<std::size_t> layers, std::uint64_t seed,
                        int trials) {
  if (layers.empty()) layers = {2, 12, 10, 1};
  const std::size_t d = layers.front();
  if (d < 2 || layers.back() != 1) {
    std::fprintf(stderr, "check-gradients: layers must run from >=2 inputs to 1 output\n");
    return 1;
  }
  Rng rng(seed);

  double worst_jet = 0.0;
  for (int t = 0; t < trials; ++t) {
    const NetworkParams p = NetworkParams::random(layers, rng.raw());
    Vector x(d);
    for (double& xi : x) xi = 1.6 * rng.uniform01() - 0.8;
    const ForwardTape tape = forward(p, x, false);
    const OutputDerivatives out = output_derivatives(tape);
    const double h = 1e-4;
    double lap_fd = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      worst_jet = std::max(
          worst_jet, fd::mismatch(out.gradient[c], fd::first(p, x, false, c, h), 1e-4, 1e-4));
      lap_fd += fd::second(p, x, false, c, h);
    }
    worst_jet = std::max(worst_jet, fd::mismatch(out.laplacian, lap_fd, 1e-4, 1e-4));
  }
  std::printf("input derivatives : worst mismatch ratio %.3g over %d nets  %s\n",
              worst_jet, trials, worst_jet < 1.0 ? "ok" : "FAIL");

  const ProblemData prob = d == 2 ? catalogue("laplace2d-exp") : catalogue("laplace-nd", d);
  double worst_param = 0.0;
  for (int t = 0; t < trials; ++t) {
    const NetworkParams p = NetworkParams::random(layers, rng.raw());
    SamplePlan plan;
    plan.n_interior = 6;
    plan.n_dirichlet = 4;
    plan.n_neumann = 4;
    plan.seed = rng.raw();
    const CauchyBatch batch = sample(prob.domain, plan, prob.exact);
    const LossOptions opts;
    const ParamGrad analytic = elliptic_loss(p, batch, opts).grad;
    const ParamGrad reference = fd::param_gradient(
        p, [&](const NetworkParams& q) { return elliptic_loss(q, batch, opts).total; },
        1e-5);
    worst_param = std::max(worst_param, fd::max_mismatch(analytic, reference, 1e-6, 1e-6));
  }
  std::printf("parameter grads   : worst mismatch ratio %.3g over %d batches %s\n",
              worst_param, trials, worst_param < 1.0 ? "ok" : "FAIL");

  return (worst_jet < 1.0 && worst_param < 1.0) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural solver for Cauchy data completion problems"};
  app.require_subcommand(1);

  std::string config_path, out_override, sample_out = "points.csv";
  bool quiet = false;
  std::vector<std::size_t> layers;
  std::uint64_t seed = 7;
  int trials = 20;

  CLI::App* run_cmd = app.add_subcommand("run", "Train one configuration");
  run_cmd->add_option("config", config_path, "JSON config file")->required();
  run_cmd->add_option("--out", out_override, "Override the artifact directory");
  run_cmd->add_flag("--quiet", quiet, "Suppress progress lines");

  CLI::App* study_cmd =
      app.add_subcommand("study", "Train every layer variant listed in the config");
  study_cmd->add_option("config", config_path, "JSON config file")->required();
  study_cmd->add_option("--out", out_override, "Override the artifact directory");
  study_cmd->add_flag("--quiet", quiet, "Suppress progress lines");

  CLI::App* sample_cmd =
      app.add_subcommand("sample", "Draw the collocation batch and write it as CSV");
  sample_cmd->add_option("config", config_path, "JSON config file")->required();
  sample_cmd->add_option("--out", sample_out, "Output CSV path");

  CLI::App* check_cmd = app.add_subcommand(
      "check-gradients", "Audit analytic derivatives against finite differences");
  check_cmd->add_option("--layers", layers, "Layer widths, input to output")
      ->delimiter(',');
  check_cmd->add_option("--seed", seed, "Base seed for the drawn nets");
  check_cmd->add_option("--trials", trials, "Nets per sweep")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, out_override, quiet);
    if (study_cmd->parsed()) return cmd_study(config_path, out_override, quiet);
    if (sample_cmd->parsed()) return cmd_sample(config_path, sample_out);
    if (check_cmd->parsed()) return cmd_check_gradients(layers, seed, trials);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
