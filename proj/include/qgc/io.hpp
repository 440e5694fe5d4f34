#pragma once

// JSON model files and machine-readable reports.
//
// Model file layout (row-major nested arrays, explicit dimensions):
//   { "schema_version": "1.0", "name": ..., "horizon": t_f,
//     "weights": { "R": [[..]], "G": [[..]] },
//     "statespace": { "dimensions": {n, n_v, n_u, n_y, n_z}, "A": .., ... }
//       or
//     "hamiltonian": { "n", "n_w", "n_y", "n_u", "R0", "Lambda", "Theta",
//                      "coupling_scale", "uncertainty": {C0, delta_tilde_rows} } }
// Complex entries are [re, im] pairs.

#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "qgc/cavity.hpp"
#include "qgc/synthesis.hpp"
#include "qgc/verify.hpp"

namespace qgc {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";

struct HamiltonianStanza {
  HamiltonianModel model;
  std::optional<HamiltonianUncertainty> uncertainty;
  double coupling_scale = 1.0;
  std::optional<Vector> x0_mean;
  std::optional<Matrix> x0_cov;
};

struct ModelFile {
  std::string schema_version = kSchemaVersion;
  std::string name;
  std::variant<UncertainSystem, HamiltonianStanza> plant;
  CostWeights weights;
  double horizon = 100.0;
};

struct LoadedModel {
  UncertainSystem system;
  CostWeights weights;
  double horizon = 0.0;
  ModelFile file;
};

// ---------------------------------------------------------------------------
// Matrix <-> JSON

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Json to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Non-finite doubles become null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

namespace detail {

inline double as_number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorCode::ParseError, where + ": expected a number");
  return j.get<double>();
}

inline Eigen::Index as_count(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw Error(ErrorCode::ParseError, where + ": expected a nonnegative integer");
  }
  return static_cast<Eigen::Index>(j.get<long long>());
}

inline Matrix parse_matrix(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, where + ": expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array()) throw Error(ErrorCode::ParseError, where + "[" + std::to_string(r) + "]: expected a row");
    const auto len = static_cast<Eigen::Index>(j[r].size());
    if (cols >= 0 && len != cols) {
      throw Error(ErrorCode::ParseError, where + ": rows have unequal length");
    }
    cols = len;
  }
  Matrix m(rows, std::max<Eigen::Index>(cols, 0));
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = as_number(j[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  if (!m.allFinite()) throw Error(ErrorCode::ParseError, where + ": non-finite entry");
  return m;
}

/// Parses a matrix whose shape is fixed by dimension fields. An empty array
/// stands for a matrix with zero rows.
inline Matrix parse_shaped(const Json& j, const std::string& where, Eigen::Index rows, Eigen::Index cols,
                           const std::string& rows_from, const std::string& cols_from) {
  Matrix m = parse_matrix(j, where);
  if (m.rows() == 0 && rows == 0) return Matrix::Zero(0, cols);
  if (m.rows() == rows && m.cols() == 0 && cols == 0) return Matrix::Zero(rows, 0);
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::DimensionMismatch,
                where + " is " + shape_of(m) + " but " + rows_from + " and " + cols_from + " require " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  return m;
}

inline Vector parse_vector(const Json& j, const std::string& where, Eigen::Index len) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, where + ": expected an array");
  if (static_cast<Eigen::Index>(j.size()) != len) {
    throw Error(ErrorCode::DimensionMismatch,
                where + " has length " + std::to_string(j.size()) + " but A requires " + std::to_string(len));
  }
  Vector v(len);
  for (Eigen::Index i = 0; i < len; ++i) v(i) = as_number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline CMatrix parse_cmatrix(const Json& j, const std::string& where, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw Error(ErrorCode::DimensionMismatch, where + ": expected " + std::to_string(rows) + " rows");
  }
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::DimensionMismatch,
                  where + "[" + std::to_string(r) + "]: expected " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& e = row[c];
      const std::string at = where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]";
      if (!e.is_array() || e.size() != 2) throw Error(ErrorCode::ParseError, at + ": expected [re, im]");
      m(r, c) = Complex(as_number(e[0], at), as_number(e[1], at));
    }
  }
  return m;
}

inline void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::ParseError, where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw Error(ErrorCode::UnknownKey, where + (where.empty() ? "" : ".") + it.key());
    }
  }
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::ParseError, where + ": missing key '" + key + "'");
  return *it;
}

inline std::string key_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline UncertainSystem parse_statespace(const Json& ss, const CostWeights& w) {
  const std::string at = "statespace";
  reject_unknown(ss,
                 {"dimensions", "A", "B0", "B1", "C0", "C1", "C2", "D0", "D12", "D20", "D22", "x0_mean", "Y0",
                  "ito_imag"},
                 at);
  const Json& dims = require(ss, "dimensions", at);
  reject_unknown(dims, {"n", "n_v", "n_u", "n_y", "n_z"}, at + ".dimensions");
  const auto n = as_count(require(dims, "n", at + ".dimensions"), at + ".dimensions.n");
  const auto nv = as_count(require(dims, "n_v", at + ".dimensions"), at + ".dimensions.n_v");
  const auto nu = as_count(require(dims, "n_u", at + ".dimensions"), at + ".dimensions.n_u");
  const auto ny = as_count(require(dims, "n_y", at + ".dimensions"), at + ".dimensions.n_y");
  const auto nz = as_count(require(dims, "n_z", at + ".dimensions"), at + ".dimensions.n_z");

  auto get = [&](const char* key, Eigen::Index r, Eigen::Index c, const std::string& rf, const std::string& cf) {
    return parse_shaped(require(ss, key, at), key_path(at, key), r, c, rf, cf);
  };
  UncertainSystem sys;
  sys.A = get("A", n, n, "n (A)", "n (A)");
  sys.B0 = get("B0", n, nv, "n (A)", "n_v");
  sys.B1 = get("B1", n, nu, "n (A)", "n_u");
  sys.C0 = get("C0", nz, n, "n_z", "n (A)");
  sys.C2 = get("C2", ny, n, "n_y", "n (A)");
  sys.D0 = get("D0", nz, nu, "n_z", "n_u");
  sys.D20 = get("D20", ny, nv, "n_y", "n_v");
  sys.D22 = get("D22", ny, nu, "n_y", "n_u");
  sys.x0_mean = ss.contains("x0_mean") ? parse_vector(ss["x0_mean"], at + ".x0_mean", n) : Vector(Vector::Zero(n));
  sys.x0_cov = ss.contains("Y0") ? get("Y0", n, n, "n (A)", "n (A)") : Matrix(Matrix::Identity(n, n));
  sys.ito_imag = ss.contains("ito_imag") ? get("ito_imag", nv, nv, "n_v", "n_v") : canonical_skew(nv);

  if (w.R.rows() != n || w.R.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "weights.R is " + shape_of(w.R) + " but A is " + shape_of(sys.A));
  }
  if (w.G.rows() != nu || w.G.cols() != nu) {
    throw Error(ErrorCode::DimensionMismatch, "weights.G is " + shape_of(w.G) + " but B1 is " + shape_of(sys.B1));
  }
  if (ss.contains("C1") || ss.contains("D12")) {
    if (!ss.contains("C1") || !ss.contains("D12")) {
      throw Error(ErrorCode::ParseError, "statespace: C1 and D12 must be given together");
    }
    sys.C1 = parse_matrix(ss["C1"], at + ".C1");
    const auto nmu = sys.C1.rows();
    sys.C1 = parse_shaped(ss["C1"], at + ".C1", nmu, n, "C1", "n (A)");
    sys.D12 = parse_shaped(ss["D12"], at + ".D12", nmu, nu, "C1 rows", "n_u (B1)");
  } else {
    install_cost_weights(sys, w);
  }
  sys.validate();
  return sys;
}

inline HamiltonianStanza parse_hamiltonian(const Json& h) {
  const std::string at = "hamiltonian";
  reject_unknown(h, {"n", "n_w", "n_y", "n_u", "R0", "Lambda", "Theta", "coupling_scale", "uncertainty",
                     "x0_mean", "Y0"},
                 at);
  HamiltonianStanza st;
  auto& hm = st.model;
  const auto n = as_count(require(h, "n", at), at + ".n");
  hm.n_w = as_count(require(h, "n_w", at), at + ".n_w");
  hm.n_y = as_count(require(h, "n_y", at), at + ".n_y");
  hm.n_u = as_count(require(h, "n_u", at), at + ".n_u");
  hm.R0 = parse_shaped(require(h, "R0", at), at + ".R0", n, n, "n", "n");
  hm.Theta = h.contains("Theta") ? parse_shaped(h["Theta"], at + ".Theta", n, n, "n", "n") : canonical_skew(n);
  st.coupling_scale = h.contains("coupling_scale") ? as_number(h["coupling_scale"], at + ".coupling_scale") : 1.0;
  hm.Lambda = st.coupling_scale * parse_cmatrix(require(h, "Lambda", at), at + ".Lambda", hm.n_w / 2, n);
  if (h.contains("uncertainty")) {
    const auto& u = h["uncertainty"];
    reject_unknown(u, {"C0", "delta_tilde_rows"}, at + ".uncertainty");
    HamiltonianUncertainty hu;
    hu.C0 = parse_shaped(require(u, "C0", at + ".uncertainty"), at + ".uncertainty.C0", n, n, "n", "n");
    hu.delta_tilde_rows = as_count(require(u, "delta_tilde_rows", at + ".uncertainty"),
                                   at + ".uncertainty.delta_tilde_rows");
    st.uncertainty = hu;
  }
  if (h.contains("x0_mean")) st.x0_mean = parse_vector(h["x0_mean"], at + ".x0_mean", n);
  if (h.contains("Y0")) st.x0_cov = parse_shaped(h["Y0"], at + ".Y0", n, n, "n", "n");
  return st;
}

inline UncertainSystem realize(const HamiltonianStanza& st, const CostWeights& w) {
  UncertainSystem sys = st.uncertainty ? realize_uncertain(st.model, *st.uncertainty) : realize_state_space(st.model);
  if (st.x0_mean) sys.x0_mean = *st.x0_mean;
  if (st.x0_cov) sys.x0_cov = *st.x0_cov;
  if (w.R.rows() != sys.n() || w.G.rows() != sys.nu()) {
    throw Error(ErrorCode::DimensionMismatch, "weights do not match the Hamiltonian model dimensions");
  }
  install_cost_weights(sys, w);
  sys.validate();
  return sys;
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace detail

inline Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError,
                source + ": line " + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline LoadedModel model_from_json(const Json& j) {
  detail::reject_unknown(j, {"schema_version", "name", "horizon", "weights", "statespace", "hamiltonian"}, "");
  LoadedModel out;
  auto& f = out.file;
  const auto& ver = detail::require(j, "schema_version", "model");
  if (!ver.is_string()) throw Error(ErrorCode::ParseError, "schema_version: expected a string");
  f.schema_version = ver.get<std::string>();
  if (f.schema_version != kSchemaVersion) {
    throw Error(ErrorCode::ParseError, "unsupported schema_version '" + f.schema_version + "'");
  }
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw Error(ErrorCode::ParseError, "name: expected a string");
    f.name = j["name"].get<std::string>();
  }
  f.horizon = j.contains("horizon") ? detail::as_number(j["horizon"], "horizon") : 100.0;
  if (!(f.horizon >= 0.0)) throw Error(ErrorCode::ParseError, "horizon: must be nonnegative");

  const auto& wj = detail::require(j, "weights", "model");
  detail::reject_unknown(wj, {"R", "G"}, "weights");
  f.weights.R = detail::parse_matrix(detail::require(wj, "R", "weights"), "weights.R");
  f.weights.G = detail::parse_matrix(detail::require(wj, "G", "weights"), "weights.G");
  if (f.weights.R.rows() != f.weights.R.cols() || (f.weights.R - f.weights.R.transpose()).norm() > 1e-12 ||
      (f.weights.R.size() > 0 && min_eig_sym(f.weights.R) < -1e-12)) {
    throw Error(ErrorCode::InvalidArgument, "weights.R must be symmetric positive semidefinite");
  }
  if (f.weights.G.rows() != f.weights.G.cols() || (f.weights.G - f.weights.G.transpose()).norm() > 1e-12 ||
      (f.weights.G.size() > 0 && !(min_eig_sym(f.weights.G) > 1e-12))) {
    throw Error(ErrorCode::InvalidArgument, "weights.G must be symmetric positive definite");
  }

  const bool has_ss = j.contains("statespace");
  const bool has_h = j.contains("hamiltonian");
  if (has_ss == has_h) throw Error(ErrorCode::ParseError, "exactly one of 'statespace' or 'hamiltonian' is required");
  if (has_ss) {
    out.system = detail::parse_statespace(j["statespace"], f.weights);
    f.plant = out.system;
  } else {
    auto st = detail::parse_hamiltonian(j["hamiltonian"]);
    out.system = detail::realize(st, f.weights);
    f.plant = std::move(st);
  }
  out.weights = f.weights;
  out.horizon = f.horizon;
  return out;
}

inline LoadedModel load_model(const std::string& path) {
  const std::string text = read_file(path);
  return model_from_json(parse_json_text(text, path));
}

inline Json statespace_json(const UncertainSystem& sys) {
  Json ss;
  ss["dimensions"] = {{"n", sys.n()}, {"n_v", sys.nv()}, {"n_u", sys.nu()}, {"n_y", sys.ny()}, {"n_z", sys.nz()}};
  ss["A"] = to_json(sys.A);
  ss["B0"] = to_json(sys.B0);
  ss["B1"] = to_json(sys.B1);
  ss["C0"] = to_json(sys.C0);
  ss["C1"] = to_json(sys.C1);
  ss["C2"] = to_json(sys.C2);
  ss["D0"] = to_json(sys.D0);
  ss["D12"] = to_json(sys.D12);
  ss["D20"] = to_json(sys.D20);
  ss["D22"] = to_json(sys.D22);
  ss["x0_mean"] = to_json(sys.x0_mean);
  ss["Y0"] = to_json(sys.x0_cov);
  ss["ito_imag"] = to_json(sys.ito_imag);
  return ss;
}

inline Json to_json(const ModelFile& f) {
  Json j;
  j["schema_version"] = f.schema_version;
  if (!f.name.empty()) j["name"] = f.name;
  j["horizon"] = f.horizon;
  j["weights"] = {{"R", to_json(f.weights.R)}, {"G", to_json(f.weights.G)}};
  if (const auto* sys = std::get_if<UncertainSystem>(&f.plant)) {
    j["statespace"] = statespace_json(*sys);
  } else {
    const auto& st = std::get<HamiltonianStanza>(f.plant);
    const auto& hm = st.model;
    Json h;
    h["n"] = hm.n();
    h["n_w"] = hm.n_w;
    h["n_y"] = hm.n_y;
    h["n_u"] = hm.n_u;
    h["R0"] = to_json(hm.R0);
    // Lambda is stored unscaled; coupling_scale is applied on load.
    h["Lambda"] = to_json(CMatrix(hm.Lambda / st.coupling_scale));
    h["Theta"] = to_json(hm.Theta);
    h["coupling_scale"] = st.coupling_scale;
    if (st.uncertainty) {
      h["uncertainty"] = {{"C0", to_json(st.uncertainty->C0)}, {"delta_tilde_rows", st.uncertainty->delta_tilde_rows}};
    }
    if (st.x0_mean) h["x0_mean"] = to_json(*st.x0_mean);
    if (st.x0_cov) h["Y0"] = to_json(*st.x0_cov);
    j["hamiltonian"] = std::move(h);
  }
  return j;
}

inline void save_model(const ModelFile& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << to_json(f).dump(2) << "\n";
}

enum class CavityForm { StateSpace, Hamiltonian };

/// Model file for the cavity example. The Hamiltonian form carries the
/// displayed coupling rows plus the measured coupling_scale; it measures both
/// quadratures of the w channel (n_y = 2), so it is a different plant from
/// the single-quadrature state-space form.
inline ModelFile make_cavity(const CavitySpec& spec, CavityForm form = CavityForm::StateSpace) {
  spec.validate();
  ModelFile f;
  f.name = std::string("cavity-") + std::string(to_string(spec.uncertainty));
  f.weights = cavity_weights();
  f.horizon = 100.0;
  if (form == CavityForm::StateSpace) {
    f.plant = make_cavity_system(spec);
  } else {
    const auto cal = calibrate_cavity(spec);
    HamiltonianStanza st;
    st.coupling_scale = cal.coupling_scale;
    st.model = cavity_hamiltonian(spec, cal.coupling_scale);
    if (spec.uncertainty == CavityUncertainty::Detuning) st.uncertainty = cavity_detuning_uncertainty(spec);
    f.plant = std::move(st);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Reports

inline Json controller_json(const Controller& k) {
  return {{"A_K", to_json(k.A_K)}, {"B_K", to_json(k.B_K)}, {"C_K", to_json(k.C_K)}, {"x_K0", to_json(k.x_K0)}};
}

inline Json to_json(const TauEvaluation& e) {
  return {{"tau", e.tau},
          {"feasible", e.feasible},
          {"failing_item", std::string(to_string(e.failing_item))},
          {"bound", number_or_null(e.bound)},
          {"rho_max", number_or_null(e.rho_max)},
          {"min_eig_Y", number_or_null(e.y_min_eig)}};
}

inline Json to_json(const SynthesisReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "synthesis";
  j["tau"] = r.tau;
  j["bound"] = r.bound;
  j["integral_bound"] = r.integral_bound;
  j["horizon"] = r.horizon;
  j["mode"] = std::string(to_string(r.riccati.mode));
  j["boundary_hit"] = r.boundary_hit;
  j["controller"] = controller_json(r.controller);
  const auto idx = frozen_sample(r.riccati);
  j["riccati"] = {{"Y", to_json(r.riccati.Y.values[idx])},
                  {"X", to_json(r.riccati.X.values[idx])},
                  {"X0", to_json(r.riccati.X.front())},
                  {"feasible", r.riccati.feasible},
                  {"c0_margin", r.riccati.c0_margin},
                  {"x_min_eig", r.riccati.x_min_eig},
                  {"rho_max", r.riccati.rho_max}};
  j["assumptions"] = {{"cost_factorization", {{"pass", r.assumption1.pass},
                                              {"d0", r.assumption1.d0},
                                              {"factor_residual", r.assumption1.factor_residual}}},
                      {"filter_riccati", {{"pass", r.riccati.c0_margin > 1e-10}, {"c0", r.riccati.c0_margin}}},
                      {"control_riccati", {{"pass", r.riccati.x_min_eig >= -1e-10}, {"min_eig", r.riccati.x_min_eig}}},
                      {"coupling", {{"pass", r.riccati.rho_max < r.tau - 1e-9}, {"rho_max", r.riccati.rho_max}}}};
  Json evals = Json::array();
  for (const auto& e : r.evaluations) evals.push_back(to_json(e));
  j["evaluations"] = std::move(evals);
  j["conventions"] = {{"control_channel", "B1 used as the control input matrix in the control Riccati equation"},
                      {"bound_integrand", "Tr[Y R_tau + B_K (Y C2^T + B0 D20^T)^T X (I - Y X / tau)^{-1}]"},
                      {"bound_normalization", "bound = V_tau = (initial term + integral) / 2; integral_bound = 2 V_tau"}};
  j["notes"] = r.notes;
  return j;
}

struct SynthesisSummary {
  Controller controller;
  double tau = 0.0;
  double bound = 0.0;
  double horizon = 0.0;
};

inline SynthesisSummary synthesis_from_json(const Json& j) {
  if (!j.is_object() || j.value("kind", "") != "synthesis") {
    throw Error(ErrorCode::ParseError, "not a synthesis report");
  }
  SynthesisSummary s;
  s.tau = detail::as_number(detail::require(j, "tau", "report"), "tau");
  s.bound = detail::as_number(detail::require(j, "bound", "report"), "bound");
  s.horizon = detail::as_number(detail::require(j, "horizon", "report"), "horizon");
  const auto& k = detail::require(j, "controller", "report");
  s.controller.A_K = detail::parse_matrix(detail::require(k, "A_K", "controller"), "controller.A_K");
  s.controller.B_K = detail::parse_matrix(detail::require(k, "B_K", "controller"), "controller.B_K");
  s.controller.C_K = detail::parse_matrix(detail::require(k, "C_K", "controller"), "controller.C_K");
  s.controller.x_K0 = detail::parse_vector(detail::require(k, "x_K0", "controller"), "controller.x_K0",
                                           s.controller.A_K.rows());
  s.controller.validate();
  return s;
}

inline Json to_json(const VerificationReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "verification";
  j["bound"] = r.bound;
  j["integral_bound"] = 2.0 * r.bound;
  j["horizon"] = r.horizon;
  Json samples = Json::array();
  for (const auto& s : r.samples) {
    Json e;
    e["delta_id"] = s.delta_id;
    e["strategy"] = s.diagnostic ? std::string("diagnostic") : std::string(to_string(s.strategy));
    e["seed"] = s.seed;
    e["sigma_max"] = s.sigma_max;
    e["admissible"] = s.admissible;
    e["stable"] = s.stable;
    e["J_dre"] = number_or_null(s.J_dre);
    e["J_mc"] = s.J_mc ? Json(s.J_mc->mean) : Json(nullptr);
    e["J_mc_stderr"] = s.J_mc ? Json(s.J_mc->std_error) : Json(nullptr);
    e["bound"] = s.bound;
    e["margin"] = number_or_null(s.margin);
    e["pass"] = s.pass;
    e["within_integral_bound"] = s.within_integral_bound;
    samples.push_back(std::move(e));
  }
  j["samples"] = std::move(samples);
  j["aggregate"] = {{"max_J_dre", number_or_null(r.max_J_dre)},
                    {"min_margin", number_or_null(r.min_margin)},
                    {"all_pass", r.all_pass},
                    {"all_within_integral_bound", r.all_within_integral_bound}};
  return j;
}

}  // namespace qgc
