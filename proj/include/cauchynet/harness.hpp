#pragma once

// Experiment driver: a strict JSON config selects a benchmark problem, a
// network shape, and training hyper-parameters; run() samples the fixed
// collocation batch, trains with ADAM, and emits the cost history, the
// final parameters, and error reports against the reference solution.
// depth_width_study() repeats a base config over several layer layouts and
// tabulates the outcomes, isolating failures per variant.
//
// Determinism contract: everything downstream of the three seeds is
// reproducible bit for bit, for any CAUCHYNET_THREADS setting.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cauchynet/loss.hpp"
#include "cauchynet/optimizer.hpp"
#include "cauchynet/problems.hpp"

namespace cauchynet {

struct ExperimentConfig {
  std::string problem;
  std::size_t dim = 0;  // required only for problems parametrized by dimension
  std::vector<std::size_t> layer_sizes;
  long long iterations = 0;
  double step = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double noise_delta = 0.0;
  std::size_t n_interior = 0;
  std::size_t n_dirichlet = 0;
  std::size_t n_neumann = 0;
  std::size_t n_initial = 0;
  std::uint64_t seed_init = 1;
  std::uint64_t seed_sample = 2;
  std::uint64_t seed_noise = 3;
  std::string output_dir;  // empty: keep artifacts in memory only
  bool adam_legacy_form = false;
  bool loss_mean = false;
  long long log_every = 1;
  bool periodic_checkpoints = false;
  std::size_t n_test_points = 0;  // 0: problem-size default
  std::size_t n_edge_points = 5000;
  std::vector<std::vector<std::size_t>> variants;  // used by the study command

  // Optional domain overrides (accessible arc and time horizon).
  bool override_window = false;
  double theta_min = 0.0, theta_max = 0.0;
  bool override_horizon = false;
  double time_horizon = 0.0;

  void validate() const {
    require(!problem.empty(), "config: problem name is required");
    require(!layer_sizes.empty(), "config: layer_sizes is required");
    for (std::size_t w : layer_sizes) require(w >= 1, "config: layer widths must be >= 1");
    require(iterations >= 1, "config: iterations must be >= 1");
    require(step > 0.0, "config: step must be positive");
    require(log_every >= 1, "config: log_every must be >= 1");
    require(noise_delta >= 0.0, "config: noise_delta must be >= 0");
    require(n_edge_points >= 1, "config: n_edge_points must be >= 1");
  }
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  require(j.is_object(), "config: top level must be an object");
  ExperimentConfig c;
  const auto as_count = [](const nlohmann::json& v, const char* what) -> std::size_t {
    require(v.is_number_integer() && v.get<long long>() >= 0, what);
    return v.get<std::size_t>();
  };
  const auto as_seed = [](const nlohmann::json& v, const char* what) -> std::uint64_t {
    require(v.is_number_integer() && v.get<long long>() >= 0, what);
    return v.get<std::uint64_t>();
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "problem") {
      require(value.is_string(), "config: problem must be a string");
      c.problem = value.get<std::string>();
    } else if (key == "dim") {
      c.dim = as_count(value, "config: dim must be a non-negative integer");
    } else if (key == "layer_sizes") {
      require(value.is_array() && !value.empty(), "config: layer_sizes must be a non-empty array");
      for (const auto& w : value)
        c.layer_sizes.push_back(as_count(w, "config: layer sizes must be non-negative integers"));
    } else if (key == "iterations") {
      require(value.is_number_integer(), "config: iterations must be an integer");
      c.iterations = value.get<long long>();
    } else if (key == "step") {
      require(value.is_number(), "config: step must be a number");
      c.step = value.get<double>();
    } else if (key == "beta1") {
      require(value.is_number(), "config: beta1 must be a number");
      c.beta1 = value.get<double>();
    } else if (key == "beta2") {
      require(value.is_number(), "config: beta2 must be a number");
      c.beta2 = value.get<double>();
    } else if (key == "eps") {
      require(value.is_number(), "config: eps must be a number");
      c.eps = value.get<double>();
    } else if (key == "noise_delta") {
      require(value.is_number(), "config: noise_delta must be a number");
      c.noise_delta = value.get<double>();
    } else if (key == "n_interior") {
      c.n_interior = as_count(value, "config: n_interior must be a non-negative integer");
    } else if (key == "n_dirichlet") {
      c.n_dirichlet = as_count(value, "config: n_dirichlet must be a non-negative integer");
    } else if (key == "n_neumann") {
      c.n_neumann = as_count(value, "config: n_neumann must be a non-negative integer");
    } else if (key == "n_initial") {
      c.n_initial = as_count(value, "config: n_initial must be a non-negative integer");
    } else if (key == "seed_init") {
      c.seed_init = as_seed(value, "config: seed_init must be a non-negative integer");
    } else if (key == "seed_sample") {
      c.seed_sample = as_seed(value, "config: seed_sample must be a non-negative integer");
    } else if (key == "seed_noise") {
      c.seed_noise = as_seed(value, "config: seed_noise must be a non-negative integer");
    } else if (key == "output_dir") {
      require(value.is_string(), "config: output_dir must be a string");
      c.output_dir = value.get<std::string>();
    } else if (key == "adam_legacy_form") {
      require(value.is_boolean(), "config: adam_legacy_form must be a boolean");
      c.adam_legacy_form = value.get<bool>();
    } else if (key == "loss_mean") {
      require(value.is_boolean(), "config: loss_mean must be a boolean");
      c.loss_mean = value.get<bool>();
    } else if (key == "log_every") {
      require(value.is_number_integer(), "config: log_every must be an integer");
      c.log_every = value.get<long long>();
    } else if (key == "periodic_checkpoints") {
      require(value.is_boolean(), "config: periodic_checkpoints must be a boolean");
      c.periodic_checkpoints = value.get<bool>();
    } else if (key == "n_test_points") {
      c.n_test_points = as_count(value, "config: n_test_points must be a non-negative integer");
    } else if (key == "n_edge_points") {
      c.n_edge_points = as_count(value, "config: n_edge_points must be a non-negative integer");
    } else if (key == "variants") {
      require(value.is_array(), "config: variants must be an array of layer arrays");
      for (const auto& variant : value) {
        require(variant.is_array() && !variant.empty(),
                "config: each variant must be a non-empty layer array");
        std::vector<std::size_t> widths;
        for (const auto& w : variant)
          widths.push_back(as_count(w, "config: layer sizes must be non-negative integers"));
        c.variants.push_back(std::move(widths));
      }
    } else if (key == "domain") {
      require(value.is_object(), "config: domain must be an object");
      for (const auto& [dk, dv] : value.items()) {
        require(dv.is_number(), "config: domain overrides must be numbers");
        if (dk == "theta_min") {
          c.override_window = true;
          c.theta_min = dv.get<double>();
        } else if (dk == "theta_max") {
          c.override_window = true;
          c.theta_max = dv.get<double>();
        } else if (dk == "time_horizon") {
          c.override_horizon = true;
          c.time_horizon = dv.get<double>();
        } else {
          throw std::invalid_argument("config: unknown domain key '" + dk + "'");
        }
      }
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ("config: cannot open '" + path + "'").c_str());
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["problem"] = c.problem;
  if (c.dim > 0) j["dim"] = c.dim;
  j["layer_sizes"] = c.layer_sizes;
  j["iterations"] = c.iterations;
  j["step"] = c.step;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps"] = c.eps;
  j["noise_delta"] = c.noise_delta;
  j["n_interior"] = c.n_interior;
  j["n_dirichlet"] = c.n_dirichlet;
  j["n_neumann"] = c.n_neumann;
  j["n_initial"] = c.n_initial;
  j["seed_init"] = c.seed_init;
  j["seed_sample"] = c.seed_sample;
  j["seed_noise"] = c.seed_noise;
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  j["adam_legacy_form"] = c.adam_legacy_form;
  j["loss_mean"] = c.loss_mean;
  j["log_every"] = c.log_every;
  j["periodic_checkpoints"] = c.periodic_checkpoints;
  if (c.n_test_points > 0) j["n_test_points"] = c.n_test_points;
  j["n_edge_points"] = c.n_edge_points;
  if (!c.variants.empty()) j["variants"] = c.variants;
  if (c.override_window || c.override_horizon) {
    nlohmann::json d;
    if (c.override_window) {
      d["theta_min"] = c.theta_min;
      d["theta_max"] = c.theta_max;
    }
    if (c.override_horizon) d["time_horizon"] = c.time_horizon;
    j["domain"] = d;
  }
  return j;
}

// Thrown when the training loop meets a non-finite cost; carries enough to
// see how far the run got and how large the parameters grew.
struct TrainingDiverged : std::runtime_error {
  long long iteration;
  double loss;
  double param_max;

  static std::string describe(long long it, double j, double pm) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "training diverged at iteration %lld (J=%g, max|param|=%g)", it, j, pm);
    return buf;
  }

  TrainingDiverged(long long it, double j, double pm)
      : std::runtime_error(describe(it, j, pm)), iteration(it), loss(j), param_max(pm) {}
};

struct HistoryRow {
  long long iter = 0;
  double total = 0.0;
  double residual = 0.0;
  double dirichlet = 0.0;
  double neumann = 0.0;
  double initial = 0.0;
};

struct RunArtifacts {
  std::vector<HistoryRow> history;
  NetworkParams params;
  double final_loss = 0.0;  // cost of the final parameters
  ErrorReport test_errors;
  ErrorReport edge_errors;
  double wall_seconds = 0.0;
};

namespace detail {

inline double params_max_abs(const NetworkParams& p) {
  double m = 0.0;
  for (const Matrix& w : p.weights)
    for (std::size_t i = 0; i < w.size(); ++i) m = std::max(m, std::abs(w.data()[i]));
  for (const Vector& b : p.biases)
    for (double v : b) m = std::max(m, std::abs(v));
  return m;
}

// Shortest round-trippable decimal form, fixed across platforms.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ("cannot write '" + path + "'").c_str());
  out << body;
}

}  // namespace detail

inline void write_history_csv(const std::vector<HistoryRow>& history,
                              const std::string& path) {
  std::string body = "iter,J,J_o,J_d,J_n,J_t\n";
  for (const HistoryRow& r : history) {
    body += std::to_string(r.iter);
    body += ',';
    body += detail::fmt17(r.total);
    body += ',';
    body += detail::fmt17(r.residual);
    body += ',';
    body += detail::fmt17(r.dirichlet);
    body += ',';
    body += detail::fmt17(r.neumann);
    body += ',';
    body += detail::fmt17(r.initial);
    body += '\n';
  }
  detail::write_text_file(path, body);
}

// One row per test point: coordinates (time last when present) and the
// signed pointwise error of the trained network against the reference.
inline void write_pointwise_csv(const std::vector<Vector>& points,
                                const ErrorReport& report, const std::string& path) {
  require(points.size() == report.pointwise.size(),
          "pointwise csv: point/error count mismatch");
  require(!points.empty(), "pointwise csv: empty point set");
  const std::size_t w = points.front().size();
  std::string body;
  for (std::size_t i = 0; i < w; ++i) body += "x" + std::to_string(i + 1) + ",";
  body += "error\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    for (std::size_t i = 0; i < w; ++i) {
      body += detail::fmt17(points[k][i]);
      body += ',';
    }
    body += detail::fmt17(report.pointwise[k]);
    body += '\n';
  }
  detail::write_text_file(path, body);
}

// One row per collocation point: coordinates (time last when present), the
// point class, the outward normal (zeros off the Neumann class), and the
// clean and observed data.
inline void write_batch_csv(const CauchyBatch& b, const std::string& path) {
  const std::size_t w = b.input_width();
  std::string body;
  for (std::size_t i = 0; i < w; ++i) {
    const bool time_col = b.time_dependent && i + 1 == w;
    body += time_col ? "t" : "x" + std::to_string(i + 1);
    body += ',';
  }
  body += "role";
  for (std::size_t i = 0; i < b.dim; ++i) body += ",n" + std::to_string(i + 1);
  body += ",target,observed\n";

  const auto point_row = [&](const Vector& x, const char* role, const Vector* normal,
                             double target, double observed) {
    for (std::size_t i = 0; i < w; ++i) {
      body += detail::fmt17(x[i]);
      body += ',';
    }
    body += role;
    for (std::size_t i = 0; i < b.dim; ++i) {
      body += ',';
      body += detail::fmt17(normal != nullptr ? (*normal)[i] : 0.0);
    }
    body += ',';
    body += detail::fmt17(target);
    body += ',';
    body += detail::fmt17(observed);
    body += '\n';
  };
  for (const Vector& x : b.interior) point_row(x, "interior", nullptr, 0.0, 0.0);
  for (const auto& pt : b.dirichlet)
    point_row(pt.x, "dirichlet", nullptr, pt.target, pt.observed);
  for (const auto& pt : b.neumann)
    point_row(pt.x, "neumann", &pt.normal, pt.target, pt.observed);
  for (const auto& pt : b.initial)
    point_row(pt.x, "initial", nullptr, pt.target, pt.observed);
  detail::write_text_file(path, body);
}

namespace detail {

inline ProblemData problem_from_config(const ExperimentConfig& c) {
  ProblemData prob = catalogue(c.problem, c.dim);
  if (c.override_window) {
    require(prob.domain.shape == Domain::Shape::Ball &&
                prob.domain.gamma.kind == GammaSpec::Kind::AngleWindow,
            "config: theta window override needs a disk domain");
    prob.domain.gamma = GammaSpec::angle_window(c.theta_min, c.theta_max);
  }
  if (c.override_horizon) {
    require(prob.time_dependent, "config: time_horizon override needs an evolution problem");
    prob.domain.time_horizon = c.time_horizon;
  }
  prob.domain.validate();
  return prob;
}

inline nlohmann::json errors_to_json(const RunArtifacts& a) {
  nlohmann::json j;
  j["final_J"] = a.final_loss;
  j["test_l2"] = a.test_errors.l2;
  j["test_absolute_fallback"] = a.test_errors.absolute;
  j["test_points"] = a.test_errors.n_points;
  j["edge_l2"] = a.edge_errors.l2;
  j["edge_absolute_fallback"] = a.edge_errors.absolute;
  j["edge_points"] = a.edge_errors.n_points;
  j["wall_seconds"] = a.wall_seconds;
  return j;
}

}  // namespace detail

// Trains one configuration end to end. Artifacts land in config.output_dir
// when it is set; the returned struct always carries them. `progress`, when
// given, receives a short line every ~2% of the iterations.
inline RunArtifacts run(const ExperimentConfig& config, std::ostream* progress = nullptr) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const ProblemData prob = detail::problem_from_config(config);
  require(!config.layer_sizes.empty() && config.layer_sizes.front() == prob.input_width(),
          "config: first layer width must match the problem input width");

  SamplePlan plan;
  plan.n_interior = config.n_interior;
  plan.n_dirichlet = config.n_dirichlet;
  plan.n_neumann = config.n_neumann;
  plan.n_initial = config.n_initial;
  plan.seed = config.seed_sample;
  const CauchyBatch batch =
      apply_noise(sample(prob.domain, plan, prob.exact), {config.noise_delta, config.seed_noise});

  NetworkParams params = NetworkParams::random(config.layer_sizes, config.seed_init);
  AdamState adam = AdamState::init(params, config.step, config.beta1, config.beta2,
                                   config.eps, config.adam_legacy_form);
  LossOptions opts;
  opts.mean = config.loss_mean;
  opts.threads = thread_count_from_env();

  const bool writing = !config.output_dir.empty();
  if (writing) {
    std::filesystem::create_directories(config.output_dir);
    detail::write_text_file(config.output_dir + "/config.json",
                            config_to_json(config).dump(2) + "\n");
  }

  const auto cost = [&](const NetworkParams& p) {
    return prob.time_dependent ? parabolic_loss(p, batch, opts)
                               : elliptic_loss(p, batch, opts);
  };

  RunArtifacts out;
  out.history.reserve(static_cast<std::size_t>(
      (config.iterations + config.log_every - 1) / config.log_every));
  const long long progress_stride = std::max(1LL, config.iterations / 50);
  for (long long i = 1; i <= config.iterations; ++i) {
    const LossReport rep = cost(params);
    if (!std::isfinite(rep.total))
      throw TrainingDiverged(i, rep.total, detail::params_max_abs(params));
    if ((i - 1) % config.log_every == 0)
      out.history.push_back(
          {i, rep.total, rep.residual, rep.dirichlet, rep.neumann, rep.initial});
    if (progress != nullptr && (i == 1 || i % progress_stride == 0))
      *progress << "iter " << i << "  J " << rep.total << '\n';
    adam_step(params, rep.grad, adam);
    if (writing && config.periodic_checkpoints && i % (config.log_every * 10) == 0) {
      char name[48];
      std::snprintf(name, sizeof name, "/checkpoint_%06lld.json", i);
      detail::write_text_file(config.output_dir + name, to_json(params).dump() + "\n");
    }
  }

  const LossReport final_rep = cost(params);
  if (!std::isfinite(final_rep.total))
    throw TrainingDiverged(config.iterations, final_rep.total,
                           detail::params_max_abs(params));
  out.final_loss = final_rep.total;
  out.params = params;

  const std::size_t n_test =
      config.n_test_points > 0 ? config.n_test_points : default_test_count(prob.dim);
  out.test_errors =
      evaluate_errors(params, prob, test_points(prob, n_test, config.seed_sample + 1000003));
  const std::vector<Vector> edge_pts =
      edge_points(prob, config.n_edge_points, config.seed_sample + 2000003);
  out.edge_errors = evaluate_errors(params, prob, edge_pts);
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (writing) {
    write_history_csv(out.history, config.output_dir + "/cost_history.csv");
    detail::write_text_file(config.output_dir + "/params.json",
                            to_json(params).dump() + "\n");
    detail::write_text_file(config.output_dir + "/errors.json",
                            detail::errors_to_json(out).dump(2) + "\n");
    write_pointwise_csv(edge_pts, out.edge_errors,
                        config.output_dir + "/edge_errors.csv");
  }
  return out;
}

struct VariantResult {
  std::vector<std::size_t> layers;
  std::size_t param_count = 0;
  std::string status;  // "ok", "diverged", or "error"
  std::string detail;  // human-readable failure description
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  double test_l2 = std::numeric_limits<double>::quiet_NaN();
  double edge_l2 = std::numeric_limits<double>::quiet_NaN();
};

struct StudyResult {
  std::vector<VariantResult> variants;
};

inline std::string layers_label(const std::vector<std::size_t>& widths) {
  std::string s;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i > 0) s += 'x';
    s += std::to_string(widths[i]);
  }
  return s;
}

inline void write_study_csv(const StudyResult& study, const std::string& path) {
  std::string body = "variant,layers,params,status,final_J,test_l2,edge_l2\n";
  for (std::size_t i = 0; i < study.variants.size(); ++i) {
    const VariantResult& v = study.variants[i];
    body += std::to_string(i);
    body += ',';
    body += layers_label(v.layers);
    body += ',';
    body += std::to_string(v.param_count);
    body += ',';
    body += v.status;
    body += ',';
    body += detail::fmt17(v.final_loss);
    body += ',';
    body += detail::fmt17(v.test_l2);
    body += ',';
    body += detail::fmt17(v.edge_l2);
    body += '\n';
  }
  detail::write_text_file(path, body);
}

// Runs the base config once per layer layout. A variant that diverges or
// errors is recorded as such without stopping its siblings.
inline StudyResult depth_width_study(const ExperimentConfig& base,
                                     const std::vector<std::vector<std::size_t>>& variants,
                                     std::ostream* progress = nullptr) {
  require(!variants.empty(), "study: at least one variant is required");
  StudyResult study;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    ExperimentConfig cfg = base;
    cfg.layer_sizes = variants[i];
    cfg.variants.clear();
    if (!base.output_dir.empty()) {
      char sub[32];
      std::snprintf(sub, sizeof sub, "/variant_%02zu", i);
      cfg.output_dir = base.output_dir + sub;
    }
    VariantResult res;
    res.layers = variants[i];
    if (progress != nullptr)
      *progress << "variant " << i << " [" << layers_label(variants[i]) << "]\n";
    try {
      const RunArtifacts art = run(cfg, progress);
      res.param_count = art.params.param_count();
      res.status = "ok";
      res.final_loss = art.final_loss;
      res.test_l2 = art.test_errors.l2;
      res.edge_l2 = art.edge_errors.l2;
    } catch (const TrainingDiverged& e) {
      res.status = "diverged";
      res.detail = e.what();
    } catch (const std::exception& e) {
      res.status = "error";
      res.detail = e.what();
    }
    study.variants.push_back(std::move(res));
  }
  if (!base.output_dir.empty()) {
    std::filesystem::create_directories(base.output_dir);
    write_study_csv(study, base.output_dir + "/summary.csv");
  }
  return study;
}

inline StudyResult depth_width_study(const ExperimentConfig& base,
                                     std::ostream* progress = nullptr) {
  return depth_width_study(base, base.variants, progress);
}

}  // namespace cauchynet
