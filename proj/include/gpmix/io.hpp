#pragma once

#include <Eigen/Dense>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpmix/data.hpp"
#include "gpmix/errors.hpp"
#include "gpmix/metrics.hpp"
#include "gpmix/model.hpp"
#include "gpmix/prediction.hpp"
#include "gpmix/selection.hpp"
#include "gpmix/simulation.hpp"

namespace gpmix {

using ordered_json = nlohmann::ordered_json;

constexpr int kModelFormatVersion = 1;

namespace detail {

inline double parse_double(const std::string& field, std::size_t row) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0' || errno == ERANGE)
    throw DataFormatError("row " + std::to_string(row) + ": cannot parse number '" + field +
                          "'");
  return v;
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline ordered_json vector_to_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index q = 0; q < v.size(); ++q) a.push_back(v[q]);
  return a;
}

inline Eigen::VectorXd vector_from_json(const ordered_json& a, const std::string& what) {
  if (!a.is_array()) throw DataFormatError(what + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index q = 0;
  for (const auto& e : a) {
    if (!e.is_number()) throw DataFormatError(what + ": expected numbers");
    v[q++] = e.get<double>();
  }
  return v;
}

inline ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r)));
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const ordered_json& a, const std::string& what) {
  if (!a.is_array()) throw DataFormatError(what + ": expected an array of rows");
  const Eigen::Index R = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd m;
  Eigen::Index r = 0;
  for (const auto& row : a) {
    const Eigen::VectorXd v = vector_from_json(row, what);
    if (r == 0) m.resize(R, v.size());
    if (v.size() != m.cols()) throw DataFormatError(what + ": ragged rows");
    m.row(r++) = v;
  }
  return m;
}

// lower triangle row by row; the source must be symmetric
inline ordered_json lower_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c <= r; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::MatrixXd lower_from_json(const ordered_json& a, const std::string& what) {
  const Eigen::Index n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd m(n, n);
  Eigen::Index r = 0;
  for (const auto& row : a) {
    if (static_cast<Eigen::Index>(row.size()) != r + 1)
      throw DataFormatError(what + ": malformed lower triangle");
    Eigen::Index c = 0;
    for (const auto& e : row) {
      const double v = e.get<double>();
      m(r, c) = v;
      m(c, r) = v;
      ++c;
    }
    ++r;
  }
  return m;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

// CSV with header id,t,y and one observation per row; rows grouped by id in
// first-appearance order, each group sorted by t on load
inline Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_row(line);
    if (row == 1) {
      if (fields.size() != 3 || fields[0] != "id" || fields[1] != "t" || fields[2] != "y")
        throw DataFormatError("row 1: expected header 'id,t,y'");
      continue;
    }
    if (fields.size() != 3)
      throw DataFormatError("row " + std::to_string(row) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
    if (fields[0].empty()) throw DataFormatError("row " + std::to_string(row) + ": empty id");
    auto& s = series[fields[0]];
    if (s.first.empty() && s.second.empty()) order.push_back(fields[0]);
    s.first.push_back(detail::parse_double(fields[1], row));
    s.second.push_back(detail::parse_double(fields[2], row));
  }
  if (order.empty()) throw DataFormatError("dataset is empty");
  Dataset data;
  for (const auto& id : order) {
    auto& s = series[id];
    const Eigen::Map<Eigen::VectorXd> t(s.first.data(),
                                        static_cast<Eigen::Index>(s.first.size()));
    const Eigen::Map<Eigen::VectorXd> y(s.second.data(),
                                        static_cast<Eigen::Index>(s.second.size()));
    data.individuals.push_back(make_individual(id, t, y));
  }
  return data;
}

inline void write_dataset_csv(const Dataset& data, std::ostream& out) {
  out << "id,t,y\n";
  out.precision(17);
  for (const auto& ind : data.individuals)
    for (Eigen::Index a = 0; a < ind.size(); ++a)
      out << ind.id << ',' << ind.t[a] << ',' << ind.y[a] << '\n';
}

inline ordered_json dataset_to_json(const Dataset& data) {
  ordered_json arr = ordered_json::array();
  for (const auto& ind : data.individuals) {
    ordered_json j;
    j["id"] = ind.id;
    j["t"] = detail::vector_to_json(ind.t);
    j["y"] = detail::vector_to_json(ind.y);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline Dataset dataset_from_json(const ordered_json& arr) {
  if (!arr.is_array() || arr.empty()) throw DataFormatError("dataset JSON: expected a nonempty array");
  Dataset data;
  for (const auto& j : arr)
    data.individuals.push_back(make_individual(j.at("id").get<std::string>(),
                                               detail::vector_from_json(j.at("t"), "t"),
                                               detail::vector_from_json(j.at("y"), "y")));
  return data;
}

inline Dataset load_dataset(const std::string& path) {
  auto in = detail::open_input(path);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    ordered_json j;
    in >> j;
    return dataset_from_json(j);
  }
  return read_dataset_csv(in);
}

inline void save_dataset_csv(const Dataset& data, const std::string& path) {
  auto out = detail::open_output(path);
  write_dataset_csv(data, out);
}

inline ordered_json prior_mean_to_json(const PriorMean& pm) {
  ordered_json j;
  if (pm.table_t.size() > 0) {
    j["table_t"] = detail::vector_to_json(pm.table_t);
    j["table_v"] = detail::vector_to_json(pm.table_v);
  } else {
    j["constant"] = pm.constant;
  }
  return j;
}

inline PriorMean prior_mean_from_json(const ordered_json& j) {
  PriorMean pm;
  if (j.contains("table_t")) {
    pm.table_t = detail::vector_from_json(j.at("table_t"), "prior mean table_t");
    pm.table_v = detail::vector_from_json(j.at("table_v"), "prior mean table_v");
    if (pm.table_t.size() != pm.table_v.size())
      throw DataFormatError("prior mean: table lengths differ");
  } else {
    pm.constant = j.at("constant").get<double>();
  }
  return pm;
}

inline ordered_json hyperparams_to_json(const HyperParams& hp) {
  ordered_json j;
  ordered_json gamma = ordered_json::array(), theta = ordered_json::array(),
               noise = ordered_json::array();
  for (const auto& g : hp.gamma) gamma.push_back({{"log_v", g.log_v}, {"log_l", g.log_l}});
  for (const auto& t : hp.theta) theta.push_back({{"log_v", t.log_v}, {"log_l", t.log_l}});
  for (const auto& s : hp.noise) noise.push_back(s.log_sigma2);
  j["gamma"] = std::move(gamma);
  j["theta"] = std::move(theta);
  j["noise_log_sigma2"] = std::move(noise);
  j["pi"] = detail::vector_to_json(hp.pi);
  return j;
}

inline HyperParams hyperparams_from_json(const ordered_json& j) {
  HyperParams hp;
  for (const auto& g : j.at("gamma"))
    hp.gamma.push_back(KernelParams{g.at("log_v").get<double>(), g.at("log_l").get<double>()});
  for (const auto& t : j.at("theta"))
    hp.theta.push_back(KernelParams{t.at("log_v").get<double>(), t.at("log_l").get<double>()});
  for (const auto& s : j.at("noise_log_sigma2")) hp.noise.push_back(NoiseParam{s.get<double>()});
  hp.pi = detail::vector_from_json(j.at("pi"), "pi");
  return hp;
}

inline ordered_json state_to_json(const TrainingState& state) {
  ordered_json j;
  j["format_version"] = kModelFormatVersion;
  j["regime"] = to_string(state.regime);
  j["k"] = state.K;
  j["grid_t"] = detail::vector_to_json(state.grid.t);
  j["grid_tol"] = state.grid.tol;
  ordered_json pms = ordered_json::array();
  for (const auto& pm : state.prior_means) pms.push_back(prior_mean_to_json(pm));
  j["prior_means"] = std::move(pms);
  j["hyperparams"] = hyperparams_to_json(state.hp);
  j["tau"] = detail::matrix_to_json(state.tau);
  ordered_json mp;
  ordered_json m_hat = ordered_json::array(), c_hat = ordered_json::array();
  for (const auto& m : state.mp.m_hat) m_hat.push_back(detail::vector_to_json(m));
  for (const auto& c : state.mp.c_hat) c_hat.push_back(detail::lower_to_json(c));
  mp["m_hat"] = std::move(m_hat);
  mp["c_hat_lower"] = std::move(c_hat);
  j["mean_process"] = std::move(mp);
  j["individuals"] = dataset_to_json(state.data);
  ordered_json trace = ordered_json::array();
  for (const auto& rec : state.elbo_trace)
    trace.push_back({{"iteration", rec.iteration}, {"step", rec.step}, {"elbo", rec.elbo}});
  j["elbo_trace"] = std::move(trace);
  j["elbo"] = state.elbo;
  j["converged"] = state.converged;
  j["iterations"] = state.iterations;
  j["train_seconds"] = state.train_seconds;
  j["warnings"] = state.warnings;
  return j;
}

inline TrainingState state_from_json(const ordered_json& j) {
  const int version = j.at("format_version").get<int>();
  if (version > kModelFormatVersion)
    throw DataFormatError("model file format_version " + std::to_string(version) +
                          " is newer than supported version " +
                          std::to_string(kModelFormatVersion));
  TrainingState state;
  state.regime = parse_regime(j.at("regime").get<std::string>());
  state.K = j.at("k").get<int>();
  state.grid.t = detail::vector_from_json(j.at("grid_t"), "grid_t");
  state.grid.tol = j.at("grid_tol").get<double>();
  for (const auto& pm : j.at("prior_means")) state.prior_means.push_back(prior_mean_from_json(pm));
  state.hp = hyperparams_from_json(j.at("hyperparams"));
  state.tau = detail::matrix_from_json(j.at("tau"), "tau");
  for (const auto& m : j.at("mean_process").at("m_hat"))
    state.mp.m_hat.push_back(detail::vector_from_json(m, "m_hat"));
  for (const auto& c : j.at("mean_process").at("c_hat_lower"))
    state.mp.c_hat.push_back(detail::lower_from_json(c, "c_hat_lower"));
  state.data = dataset_from_json(j.at("individuals"));
  for (const auto& rec : j.at("elbo_trace")) {
    ElboRecord r;
    r.iteration = rec.at("iteration").get<int>();
    r.step = rec.at("step").get<std::string>();
    r.elbo = rec.at("elbo").get<double>();
    state.elbo_trace.push_back(std::move(r));
  }
  state.elbo = j.at("elbo").get<double>();
  state.converged = j.at("converged").get<bool>();
  state.iterations = j.at("iterations").get<int>();
  state.train_seconds = j.at("train_seconds").get<double>();
  for (const auto& w : j.at("warnings")) state.warnings.push_back(w.get<std::string>());
  state.grid.index_of.clear();
  for (const auto& ind : state.data.individuals)
    state.grid.index_of.push_back(resolve_timestamps(state.grid.t, ind.t, state.grid.tol));
  return state;
}

inline void save_state(const TrainingState& state, const std::string& path) {
  auto out = detail::open_output(path);
  out << state_to_json(state).dump(2) << '\n';
}

inline TrainingState load_state(const std::string& path) {
  auto in = detail::open_input(path);
  ordered_json j;
  in >> j;
  return state_from_json(j);
}

inline ordered_json prediction_to_json(const PredictResult& res) {
  ordered_json j;
  j["t_pred"] = detail::vector_to_json(res.mixture.t);
  j["path"] = res.path;
  j["weights"] = detail::vector_to_json(res.star.tau_star);
  j["theta_star"] = {{"log_v", res.star.theta_star.log_v},
                     {"log_l", res.star.theta_star.log_l}};
  j["sigma_star_log_sigma2"] = res.star.sigma_star.log_sigma2;
  j["em_iterations"] = res.star.iterations;
  ordered_json comps = ordered_json::array();
  for (std::size_t k = 0; k < res.mixture.components.size(); ++k) {
    const auto& c = res.mixture.components[k];
    ordered_json jc;
    jc["weight"] = res.mixture.weights[static_cast<Eigen::Index>(k)];
    jc["mean"] = detail::vector_to_json(c.mean);
    jc["var_diag"] = detail::vector_to_json(c.cov.diagonal());
    jc["interval95"] = detail::matrix_to_json(res.mixture.interval95(static_cast<int>(k)));
    comps.push_back(std::move(jc));
  }
  j["clusters"] = std::move(comps);
  j["mixture_mean"] = detail::vector_to_json(res.mixture.mixture_mean());
  j["warnings"] = res.warnings;
  return j;
}

// enough of a prediction to recompute coverage and error metrics
struct LoadedPrediction {
  MixturePrediction mixture;
  std::string path;
};

inline LoadedPrediction prediction_from_json(const ordered_json& j) {
  LoadedPrediction out;
  const Eigen::VectorXd t = detail::vector_from_json(j.at("t_pred"), "t_pred");
  const Eigen::VectorXd w = detail::vector_from_json(j.at("weights"), "weights");
  std::vector<ClusterPosterior> comps;
  for (const auto& jc : j.at("clusters")) {
    ClusterPosterior c;
    c.mean = detail::vector_from_json(jc.at("mean"), "mean");
    c.cov = detail::vector_from_json(jc.at("var_diag"), "var_diag").asDiagonal();
    comps.push_back(std::move(c));
  }
  out.mixture = mixture_prediction(std::move(comps), w, t);
  out.path = j.value("path", "");
  return out;
}

inline ordered_json selection_to_json(const SelectionResult& res) {
  ordered_json j;
  ordered_json entries = ordered_json::array();
  for (const auto& e : res.entries)
    entries.push_back({{"k", e.K},
                       {"elbo", e.elbo},
                       {"penalty", e.penalty},
                       {"vbic", e.vbic},
                       {"selected", e.K == res.best_k}});
  j["entries"] = std::move(entries);
  j["best_k"] = res.best_k;
  return j;
}

inline ordered_json truth_to_json(const SimTruth& truth) {
  ordered_json j;
  j["scheme"] = "main";
  j["z"] = truth.z;
  j["grid_t"] = detail::vector_to_json(truth.grid);
  ordered_json m = ordered_json::array(), mu = ordered_json::array();
  for (const auto& v : truth.m) m.push_back(detail::vector_to_json(v));
  for (const auto& v : truth.mu) mu.push_back(detail::vector_to_json(v));
  j["prior_mean_curves"] = std::move(m);
  j["mean_process_curves"] = std::move(mu);
  j["hyperparams"] = hyperparams_to_json(truth.hp);
  ordered_json cfg;
  cfg["seed"] = truth.config.seed;
  cfg["m"] = truth.config.M;
  cfg["k_true"] = truth.config.K_true;
  cfg["n_pool"] = truth.config.N_pool;
  cfg["n_i"] = truth.config.N_i;
  cfg["regime"] = to_string(truth.config.regime);
  cfg["ranges"] = {{"a", {truth.config.a_lo, truth.config.a_hi}},
                   {"b", {truth.config.b_lo, truth.config.b_hi}},
                   {"variance", {truth.config.v_lo, truth.config.v_hi}},
                   {"lengthscale", {truth.config.l_lo, truth.config.l_hi}},
                   {"sigma2", {truth.config.s2_lo, truth.config.s2_hi}}};
  j["config"] = std::move(cfg);
  return j;
}

inline ordered_json truth_to_json(const SchemeATruth& truth) {
  ordered_json j;
  j["scheme"] = "a";
  j["z"] = truth.z;
  j["u"] = detail::vector_to_json(truth.u);
  j["grid_t"] = detail::vector_to_json(truth.grid);
  ordered_json curves = ordered_json::array();
  for (const auto& c : truth.curves) curves.push_back(detail::vector_to_json(c));
  j["curves"] = std::move(curves);
  return j;
}

inline std::vector<int> truth_labels_from_json(const ordered_json& j) {
  std::vector<int> z;
  for (const auto& e : j.at("z")) z.push_back(e.get<int>());
  return z;
}

// CSV with header id,label pairing each individual with a cluster label
inline void write_labels_csv(const std::vector<std::string>& ids,
                             const std::vector<int>& labels, std::ostream& out) {
  if (ids.size() != labels.size()) throw LengthMismatch("labels: id/label count mismatch");
  out << "id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << labels[i] << '\n';
}

inline std::map<std::string, std::string> read_labels_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  std::map<std::string, std::string> labels;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_row(line);
    if (row == 1) {
      if (fields.size() != 2 || fields[0] != "id" || fields[1] != "label")
        throw DataFormatError("row 1: expected header 'id,label'");
      continue;
    }
    if (fields.size() != 2)
      throw DataFormatError("row " + std::to_string(row) + ": expected 2 fields, got " +
                            std::to_string(fields.size()));
    if (fields[0].empty()) throw DataFormatError("row " + std::to_string(row) + ": empty id");
    labels[fields[0]] = fields[1];
  }
  if (labels.empty()) throw DataFormatError("label file is empty");
  return labels;
}

inline ordered_json load_json(const std::string& path) {
  auto in = detail::open_input(path);
  ordered_json j;
  in >> j;
  return j;
}

inline void save_json(const ordered_json& j, const std::string& path) {
  auto out = detail::open_output(path);
  out << j.dump(2) << '\n';
}

}  // namespace gpmix
