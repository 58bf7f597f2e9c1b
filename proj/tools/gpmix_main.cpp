#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "gpmix/io.hpp"
#include "gpmix/metrics.hpp"
#include "gpmix/prediction.hpp"
#include "gpmix/selection.hpp"
#include "gpmix/simulation.hpp"
#include "gpmix/vem.hpp"

namespace {

namespace fs = std::filesystem;
using gpmix::ordered_json;

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

fs::path require_dir(const std::string& dir) {
  const fs::path p(dir);
  if (!fs::is_directory(p))
    throw gpmix::DataFormatError("output directory '" + dir + "' does not exist");
  return p;
}

// "lo:hi:n" for n evenly spaced points, or a comma-separated list of values
Eigen::VectorXd parse_grid_spec(const std::string& spec) {
  std::vector<double> vals;
  if (spec.find(':') != std::string::npos) {
    double lo = 0.0, hi = 0.0;
    long long n = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lld", &lo, &hi, &n) != 3 || n < 1)
      throw std::invalid_argument("grid spec '" + spec + "' must be lo:hi:count");
    return Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(n), lo, hi);
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != tok.size()) throw std::invalid_argument("grid spec: bad value '" + tok + "'");
    vals.push_back(v);
  }
  if (vals.empty()) throw std::invalid_argument("grid spec '" + spec + "' is empty");
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

// "a..b" (either direction) or a comma-separated list of K values
std::vector<int> parse_k_range(const std::string& spec) {
  const auto to_int = [](const std::string& tok) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != tok.size()) throw std::invalid_argument("K range: bad value '" + tok + "'");
    return v;
  };
  std::vector<int> ks;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const int a = to_int(spec.substr(0, dots));
    const int b = to_int(spec.substr(dots + 2));
    const int lo = std::min(a, b), hi = std::max(a, b);
    for (int k = lo; k <= hi; ++k) ks.push_back(k);
    return ks;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) ks.push_back(to_int(tok));
  if (ks.empty()) throw std::invalid_argument("K range '" + spec + "' is empty");
  return ks;
}

gpmix::Individual single_individual(const std::string& path, const char* flag) {
  const gpmix::Dataset d = gpmix::load_dataset(path);
  if (d.size() != 1)
    throw gpmix::DataFormatError(std::string(flag) + " file '" + path + "' must contain " +
                                 "exactly one individual, got " + std::to_string(d.size()));
  return d.individuals[0];
}

void write_elbo_trace_csv(const gpmix::TrainingState& state, const fs::path& path) {
  std::ofstream out(path);
  out.precision(17);
  out << "iteration,step,elbo\n";
  for (const auto& rec : state.elbo_trace)
    out << rec.iteration << ',' << rec.step << ',' << rec.elbo << '\n';
}

void write_tau_csv(const gpmix::TrainingState& state, const fs::path& path) {
  std::ofstream out(path);
  out.precision(17);
  out << "id";
  for (int k = 1; k <= state.K; ++k) out << ",tau_" << k;
  out << '\n';
  for (std::size_t i = 0; i < state.data.size(); ++i) {
    out << state.data.individuals[i].id;
    for (int k = 0; k < state.K; ++k) out << ',' << state.tau(static_cast<Eigen::Index>(i), k);
    out << '\n';
  }
}

// model files carry no wall-clock content so repeated runs are byte-identical;
// timing lives in the run report instead
void save_model(gpmix::TrainingState state, const fs::path& path) {
  state.train_seconds = 0.0;
  gpmix::save_state(state, path.string());
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

struct SimulateOpts {
  std::string scheme = "main";
  std::string out;
  std::uint64_t seed = 0;
  int M = 50;
  int k_true = 3;
  int n_pool = 200;
  int n_i = 30;
  int n_common = 30;
  std::string regime = "H00";
};

int cmd_simulate(const SimulateOpts& o) {
  const fs::path dir = require_dir(o.out);
  ordered_json manifest;
  manifest["command"] = "simulate";
  manifest["scheme"] = o.scheme;
  manifest["seed"] = o.seed;

  gpmix::Dataset data;
  ordered_json truth;
  std::vector<int> labels;
  if (o.scheme == "main") {
    gpmix::SimConfig cfg;
    cfg.seed = o.seed;
    cfg.M = o.M;
    cfg.K_true = o.k_true;
    cfg.N_pool = o.n_pool;
    cfg.N_i = o.n_i;
    cfg.regime = gpmix::parse_regime(o.regime);
    const auto sim = gpmix::simulate_main(cfg);
    data = sim.data;
    truth = gpmix::truth_to_json(sim.truth);
    labels = sim.truth.z;
    manifest["config"] = truth.at("config");
  } else if (o.scheme == "a") {
    const auto sim = gpmix::simulate_scheme_a(o.seed, o.M, o.n_common);
    data = sim.data;
    truth = gpmix::truth_to_json(sim.truth);
    labels = sim.truth.z;
    manifest["config"] = {{"seed", o.seed}, {"m", o.M}, {"n_common", o.n_common}};
  } else {
    throw std::invalid_argument("unknown scheme '" + o.scheme + "' (expected main or a)");
  }

  gpmix::save_dataset_csv(data, (dir / "dataset.csv").string());
  gpmix::save_json(truth, (dir / "truth.json").string());
  std::vector<std::string> ids;
  for (const auto& ind : data.individuals) ids.push_back(ind.id);
  {
    std::ofstream out(dir / "labels.csv");
    gpmix::write_labels_csv(ids, labels, out);
  }
  manifest["generated_at"] = iso_timestamp();
  gpmix::save_json(manifest, (dir / "manifest.json").string());

  std::cout << "wrote " << (dir / "dataset.csv").string() << " (" << data.size()
            << " individuals)\n"
            << "wrote " << (dir / "truth.json").string() << '\n'
            << "wrote " << (dir / "labels.csv").string() << '\n'
            << "wrote " << (dir / "manifest.json").string() << '\n';
  return 0;
}

struct TrainOpts {
  std::string data;
  std::string out;
  int K = 1;
  std::string regime = "H00";
  std::uint64_t seed = 0;
  int max_iter = 25;
  double rel_tol = 1e-3;
  int restarts = 1;
  int threads = 1;
};

int cmd_train(const TrainOpts& o) {
  const fs::path dir = require_dir(o.out);
  const gpmix::Dataset data = gpmix::load_dataset(o.data);

  gpmix::InitConfig init;
  init.seed = o.seed;
  init.restarts = o.restarts;
  gpmix::StopConfig stop;
  stop.max_iter = o.max_iter;
  stop.rel_tol = o.rel_tol;
  const auto state = gpmix::train(data, o.K, gpmix::parse_regime(o.regime), init, stop,
                                  o.threads);

  save_model(state, dir / "model.json");
  write_elbo_trace_csv(state, dir / "elbo_trace.csv");
  write_tau_csv(state, dir / "tau.csv");

  ordered_json report;
  report["command"] = "train";
  report["data"] = o.data;
  report["k"] = o.K;
  report["regime"] = gpmix::to_string(state.regime);
  report["seed"] = o.seed;
  report["iterations"] = state.iterations;
  report["converged"] = state.converged;
  report["elbo"] = state.elbo;
  report["train_seconds"] = state.train_seconds;
  report["warnings"] = state.warnings;
  report["generated_at"] = iso_timestamp();
  gpmix::save_json(report, (dir / "report.json").string());

  print_warnings(state.warnings);
  std::cout << "k=" << state.K << " regime=" << gpmix::to_string(state.regime)
            << " iterations=" << state.iterations << " converged=" << std::boolalpha
            << state.converged << " elbo=" << state.elbo << '\n'
            << "wrote " << (dir / "model.json").string() << '\n';
  return 0;
}

struct SelectKOpts {
  std::string data;
  std::string k_range = "1..6";
  std::string regime = "H00";
  std::string out;
  std::uint64_t seed = 0;
  int max_iter = 25;
  double rel_tol = 1e-3;
  int threads = 1;
};

int cmd_select_k(const SelectKOpts& o) {
  const gpmix::Dataset data = gpmix::load_dataset(o.data);
  gpmix::InitConfig init;
  init.seed = o.seed;
  gpmix::StopConfig stop;
  stop.max_iter = o.max_iter;
  stop.rel_tol = o.rel_tol;
  const auto res = gpmix::select_k(data, parse_k_range(o.k_range),
                                   gpmix::parse_regime(o.regime), init, stop, o.threads);

  std::printf("%4s  %14s  %12s  %14s  %s\n", "K", "ELBO", "penalty", "VBIC", "selected");
  for (const auto& e : res.entries)
    std::printf("%4d  %14.4f  %12.4f  %14.4f  %s\n", e.K, e.elbo, e.penalty, e.vbic,
                e.K == res.best_k ? "*" : "");
  std::cout << "selected k=" << res.best_k << '\n';

  if (!o.out.empty()) {
    const fs::path dir = require_dir(o.out);
    gpmix::save_json(gpmix::selection_to_json(res), (dir / "vbic.json").string());
    for (const auto& e : res.entries)
      if (e.K == res.best_k) save_model(e.state, dir / "model.json");
    std::cout << "wrote " << (dir / "vbic.json").string() << '\n'
              << "wrote " << (dir / "model.json").string() << '\n';
  }
  return 0;
}

struct PredictOpts {
  std::string model;
  std::string obs;
  std::string t_pred;
  std::string mode = "auto";
  std::string out;
  std::string truth;
  std::string y_grid;
  bool heatmap = false;
  bool collapse = false;
  bool no_training_grid = false;
  int max_em_iter = 20;
  double em_rel_tol = 1e-3;
  int threads = 1;
};

gpmix::PredictMode parse_mode(const std::string& s) {
  if (s == "auto") return gpmix::PredictMode::Auto;
  if (s == "em") return gpmix::PredictMode::Em;
  if (s == "shared") return gpmix::PredictMode::SharedHypers;
  if (s == "prior") return gpmix::PredictMode::PriorWeights;
  throw std::invalid_argument("unknown mode '" + s + "' (expected auto, em, shared, or prior)");
}

// y range covering every cluster's 95% band with 10% padding
Eigen::VectorXd default_y_grid(const gpmix::MixturePrediction& mix) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < mix.components.size(); ++k) {
    const Eigen::MatrixXd band = mix.interval95(static_cast<int>(k));
    lo = std::min(lo, band.col(0).minCoeff());
    hi = std::max(hi, band.col(1).maxCoeff());
  }
  const double pad = 0.1 * (hi - lo + 1e-12);
  return Eigen::VectorXd::LinSpaced(101, lo - pad, hi + pad);
}

void write_heatmap_csv(const gpmix::MixturePrediction& mix, const Eigen::VectorXd& t_grid,
                       const Eigen::VectorXd& y_grid, const fs::path& path) {
  const Eigen::MatrixXd H = gpmix::density_heatmap(mix, t_grid, y_grid);
  std::ofstream out(path);
  out.precision(17);
  out << "y";
  for (Eigen::Index c = 0; c < t_grid.size(); ++c) out << ',' << t_grid[c];
  out << '\n';
  for (Eigen::Index r = 0; r < y_grid.size(); ++r) {
    out << y_grid[r];
    for (Eigen::Index c = 0; c < t_grid.size(); ++c) out << ',' << H(r, c);
    out << '\n';
  }
}

int cmd_predict(const PredictOpts& o) {
  const auto state = gpmix::load_state(o.model);

  Eigen::VectorXd t_obs, y_obs;
  if (!o.obs.empty()) {
    const auto ind = single_individual(o.obs, "--obs");
    t_obs = ind.t;
    y_obs = ind.y;
  }

  gpmix::PredictConfig cfg;
  cfg.t_pred = o.t_pred.empty() ? state.grid.t : parse_grid_spec(o.t_pred);
  cfg.include_training_grid = !o.no_training_grid;
  cfg.mode = parse_mode(o.mode);
  cfg.max_em_iter = o.max_em_iter;
  cfg.em_rel_tol = o.em_rel_tol;
  cfg.threads = o.threads;

  const auto res = gpmix::predict(state, t_obs, y_obs, cfg);
  print_warnings(res.warnings);
  std::cout << "path: " << res.path << '\n';
  if (res.star.iterations > 0)
    std::cout << "em iterations: " << res.star.iterations << (res.star.converged ? "" : " (max)")
              << '\n';
  std::cout << "weights:";
  for (Eigen::Index k = 0; k < res.star.tau_star.size(); ++k)
    std::cout << ' ' << res.star.tau_star[k];
  std::cout << '\n';

  ordered_json j = gpmix::prediction_to_json(res);
  if (o.collapse) {
    const auto& best = res.mixture.collapsed();
    ordered_json jc;
    jc["cluster"] = res.mixture.argmax_weight();
    jc["mean"] = gpmix::detail::vector_to_json(best.mean);
    jc["var_diag"] = gpmix::detail::vector_to_json(best.cov.diagonal());
    jc["interval95"] =
        gpmix::detail::matrix_to_json(res.mixture.interval95(res.mixture.argmax_weight()));
    j["collapsed"] = std::move(jc);
  }
  if (!o.truth.empty()) {
    const auto truth = single_individual(o.truth, "--truth");
    const auto idx = gpmix::resolve_timestamps(res.mixture.t, truth.t, state.grid.tol);
    for (std::size_t a = 0; a < idx.size(); ++a)
      if (idx[a] < 0)
        throw gpmix::UnresolvedTimestamp("truth timestamp " + std::to_string(truth.t[a]) +
                                         " is not on the prediction grid");
    const Eigen::VectorXd mean = res.mixture.mixture_mean();
    Eigen::VectorXd at_truth(truth.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
      at_truth[static_cast<Eigen::Index>(a)] = mean[idx[a]];
    const double mse_v = gpmix::mse(at_truth, truth.y);
    const double wcic_v = gpmix::wcic95(res.mixture, truth.t, truth.y, state.grid.tol);
    std::cout << "mse: " << mse_v << '\n' << "wcic95: " << wcic_v << '\n';
    j["metrics"] = {{"mse", mse_v}, {"wcic95", wcic_v}};
  }

  if (!o.out.empty()) {
    const fs::path dir = require_dir(o.out);
    gpmix::save_json(j, (dir / "prediction.json").string());
    std::cout << "wrote " << (dir / "prediction.json").string() << '\n';
    if (o.heatmap) {
      const Eigen::VectorXd y_grid =
          o.y_grid.empty() ? default_y_grid(res.mixture) : parse_grid_spec(o.y_grid);
      write_heatmap_csv(res.mixture, cfg.t_pred, y_grid, dir / "heatmap.csv");
      std::cout << "wrote " << (dir / "heatmap.csv").string() << '\n';
    }
  }
  return 0;
}

struct EvaluateOpts {
  std::string pred;
  std::string truth;
  std::string model;
  std::string truth_labels;
  std::string out;
};

int cmd_evaluate(const EvaluateOpts& o) {
  if (o.pred.empty() && o.model.empty())
    throw std::invalid_argument("evaluate needs --pred/--truth and/or --model/--truth-labels");
  if (o.pred.empty() != o.truth.empty())
    throw std::invalid_argument("--pred and --truth must be given together");
  if (o.model.empty() != o.truth_labels.empty())
    throw std::invalid_argument("--model and --truth-labels must be given together");

  ordered_json metrics;
  std::printf("%-8s  %s\n", "metric", "value");
  if (!o.pred.empty()) {
    const auto loaded = gpmix::prediction_from_json(gpmix::load_json(o.pred));
    const auto truth = single_individual(o.truth, "--truth");
    const auto idx = gpmix::resolve_timestamps(loaded.mixture.t, truth.t, 1e-9);
    for (std::size_t a = 0; a < idx.size(); ++a)
      if (idx[a] < 0)
        throw gpmix::UnresolvedTimestamp("truth timestamp " + std::to_string(truth.t[a]) +
                                         " is not on the prediction grid");
    const Eigen::VectorXd mean = loaded.mixture.mixture_mean();
    Eigen::VectorXd at_truth(truth.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
      at_truth[static_cast<Eigen::Index>(a)] = mean[idx[a]];
    const double mse_v = gpmix::mse(at_truth, truth.y);
    const double wcic_v = gpmix::wcic95(loaded.mixture, truth.t, truth.y);
    std::printf("%-8s  %.6f\n", "mse", mse_v);
    std::printf("%-8s  %.6f\n", "wcic95", wcic_v);
    metrics["mse"] = mse_v;
    metrics["wcic95"] = wcic_v;
  }
  if (!o.model.empty()) {
    const auto state = gpmix::load_state(o.model);
    auto in = gpmix::detail::open_input(o.truth_labels);
    const auto labels = gpmix::read_labels_csv(in);
    std::vector<std::string> truth_l, pred_l;
    for (std::size_t i = 0; i < state.data.size(); ++i) {
      const auto& id = state.data.individuals[i].id;
      const auto it = labels.find(id);
      if (it == labels.end())
        throw gpmix::DataFormatError("label file has no entry for individual '" + id + "'");
      truth_l.push_back(it->second);
      Eigen::Index best = 0;
      state.tau.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
      pred_l.push_back(std::to_string(best));
    }
    const double ari_v = gpmix::ari(truth_l, pred_l);
    std::printf("%-8s  %.6f\n", "ari", ari_v);
    metrics["ari"] = ari_v;
  }
  if (!o.out.empty()) {
    gpmix::save_json(metrics, o.out);
    std::cout << "wrote " << o.out << '\n';
  }
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"gpmix: clustering and prediction for irregularly sampled time series"};
  app.require_subcommand(1);

  SimulateOpts so;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset with known truth");
  sim->add_option("--scheme", so.scheme, "main or a")
      ->check(CLI::IsMember({"main", "a"}))->capture_default_str();
  sim->add_option("--out", so.out, "existing output directory")->required();
  sim->add_option("--seed", so.seed, "RNG seed")->capture_default_str();
  sim->add_option("--m", so.M, "number of individuals")->capture_default_str();
  sim->add_option("--k-true", so.k_true, "number of generating clusters (main)")
      ->capture_default_str();
  sim->add_option("--n-pool", so.n_pool, "candidate grid size (main)")->capture_default_str();
  sim->add_option("--n-i", so.n_i, "observations per individual (main)")->capture_default_str();
  sim->add_option("--n-common", so.n_common, "common grid size (scheme a)")
      ->capture_default_str();
  sim->add_option("--regime", so.regime, "H00, Hk0, H0i, or Hki (main)")
      ->check(CLI::IsMember({"H00", "Hk0", "H0i", "Hki"}))->capture_default_str();

  TrainOpts to;
  auto* train = app.add_subcommand("train", "fit the mixture model to a dataset");
  train->add_option("--data", to.data, "dataset CSV or JSON")->required();
  train->add_option("--out", to.out, "existing output directory")->required();
  train->add_option("--k", to.K, "number of clusters")->required()
      ->check(CLI::Range(1, std::numeric_limits<int>::max(), "POSITIVE"));
  train->add_option("--regime", to.regime, "H00, Hk0, H0i, or Hki")
      ->check(CLI::IsMember({"H00", "Hk0", "H0i", "Hki"}))->capture_default_str();
  train->add_option("--seed", to.seed, "RNG seed for initialization")->capture_default_str();
  train->add_option("--max-iter", to.max_iter, "iteration cap")->capture_default_str();
  train->add_option("--tol", to.rel_tol, "relative objective tolerance")
      ->capture_default_str();
  train->add_option("--restarts", to.restarts, "independent restarts")->capture_default_str();
  train->add_option("--threads", to.threads, "worker thread cap")->capture_default_str();

  SelectKOpts ko;
  auto* sel = app.add_subcommand("select-k", "fit a range of K and pick the best by VBIC");
  sel->add_option("--data", ko.data, "dataset CSV or JSON")->required();
  sel->add_option("--k-range", ko.k_range, "a..b or comma list")->capture_default_str();
  sel->add_option("--regime", ko.regime, "H00, Hk0, H0i, or Hki")
      ->check(CLI::IsMember({"H00", "Hk0", "H0i", "Hki"}))->capture_default_str();
  sel->add_option("--out", ko.out, "existing output directory (optional)");
  sel->add_option("--seed", ko.seed, "RNG seed for initialization")->capture_default_str();
  sel->add_option("--max-iter", ko.max_iter, "iteration cap per fit")->capture_default_str();
  sel->add_option("--tol", ko.rel_tol, "relative objective tolerance")->capture_default_str();
  sel->add_option("--threads", ko.threads, "worker thread cap")->capture_default_str();

  PredictOpts po;
  auto* pred = app.add_subcommand("predict", "predict a new individual from a trained model");
  pred->add_option("--model", po.model, "model JSON from train/select-k")->required();
  pred->add_option("--obs", po.obs, "observed points of the new individual (CSV/JSON)");
  pred->add_option("--t-pred", po.t_pred, "targets: lo:hi:count or comma list "
                                          "(default: training grid)");
  pred->add_option("--mode", po.mode, "auto, em, shared, or prior")
      ->check(CLI::IsMember({"auto", "em", "shared", "prior"}))->capture_default_str();
  pred->add_option("--out", po.out, "existing output directory (optional)");
  pred->add_option("--truth", po.truth, "held-out points (CSV/JSON) for MSE/WCIC95");
  pred->add_flag("--heatmap", po.heatmap, "also write a density heatmap CSV");
  pred->add_option("--y-grid", po.y_grid, "heatmap y grid: lo:hi:count or comma list");
  pred->add_flag("--collapse", po.collapse, "include the most-probable-cluster Gaussian");
  pred->add_flag("--no-training-grid", po.no_training_grid,
                 "do not extend the working grid with the training grid");
  pred->add_option("--max-em-iter", po.max_em_iter, "prediction EM cap")->capture_default_str();
  pred->add_option("--em-tol", po.em_rel_tol, "prediction EM tolerance")->capture_default_str();
  pred->add_option("--threads", po.threads, "worker thread cap")->capture_default_str();

  EvaluateOpts eo;
  auto* eval = app.add_subcommand("evaluate", "score predictions and clusterings");
  eval->add_option("--pred", eo.pred, "prediction JSON from predict");
  eval->add_option("--truth", eo.truth, "held-out points (CSV/JSON) for MSE/WCIC95");
  eval->add_option("--model", eo.model, "model JSON for clustering evaluation");
  eval->add_option("--truth-labels", eo.truth_labels, "true labels CSV (id,label)");
  eval->add_option("--out", eo.out, "metrics JSON path (optional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*sim) return cmd_simulate(so);
  if (*train) return cmd_train(to);
  if (*sel) return cmd_select_k(ko);
  if (*pred) return cmd_predict(po);
  return cmd_evaluate(eo);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gpmix::DataFormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gpmix::LengthMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gpmix::UnresolvedTimestamp& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gpmix::DuplicateWithinIndividual& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gpmix::NonPositiveDefinite& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const gpmix::NonFiniteObjective& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
