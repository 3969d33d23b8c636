#include "noe/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace noe {

using nlohmann::json;

namespace {

constexpr double kSymTol = 1e-12;

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ValidationError("field '" + field + "': " + why);
}

Eigen::VectorXd to_vector(const json& j, const std::string& field, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ParseError("field '" + field + "' must be an array of length " + std::to_string(n));
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    if (!j[i].is_number()) throw ParseError("field '" + field + "' has a non-numeric entry");
    v[i] = j[i].get<double>();
    if (!std::isfinite(v[i])) throw ParseError("field '" + field + "' has a non-finite entry");
  }
  return v;
}

Eigen::MatrixXd to_matrix(const json& j, const std::string& field, int rows, int cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw ParseError("field '" + field + "' must be " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw ParseError("field '" + field + "' row " + std::to_string(r) + " must have " +
                       std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw ParseError("field '" + field + "' has a non-numeric entry");
      m(r, c) = row[c].get<double>();
      if (!std::isfinite(m(r, c))) throw ParseError("field '" + field + "' has a non-finite entry");
    }
  }
  return m;
}

json from_vector(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

json from_matrix(const Eigen::MatrixXd& m) {
  json j = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

}  // namespace

void OneBodyFermionModel::validate() const {
  require(M >= 1, "M", "orbital count must be >= 1");
  require(n_el > 0 && n_el < M, "n_el", "electron count must satisfy 0 < n_el < M");
  require(h.rows() == M && h.cols() == M, "h", "must be M x M");
  double asym = (h - h.adjoint()).cwiseAbs().maxCoeff();
  require(asym <= kSymTol, "h", "not Hermitian (max deviation " + std::to_string(asym) + ")");
  require(std::isfinite(E0), "E0", "must be finite");
}

bool ContractionScheme::is_uniform(double tol) const {
  for (Eigen::Index i = 1; i < f.size(); ++i)
    if (std::abs(f[i] - f[0]) > tol) return false;
  return true;
}

ContractionScheme ContractionScheme::uniform(int M, double f_value) {
  ContractionScheme s;
  s.f = Eigen::VectorXd::Constant(M, f_value);
  return s;
}

ContractionScheme ContractionScheme::half_filling(const OneBodyFermionModel& m) {
  return uniform(m.M, static_cast<double>(m.n_el) / m.M);
}

void ContractionScheme::validate(int M) const {
  require(f.size() == M, "f", "contraction dimension must match the orbital count");
  for (Eigen::Index i = 0; i < f.size(); ++i)
    require(f[i] >= 0.0 && f[i] <= 1.0, "f", "fermionic contraction must lie in [0,1]");
}

void BosonQuadraticModel::validate() const {
  require(N >= 1, "N", "mode count must be >= 1");
  require(omega.size() == N, "omega", "must have N entries");
  for (int i = 0; i < N; ++i) require(omega[i] > 0.0, "omega", "frequencies must be positive");
  require(h_up.size() == N, "h_up", "must have N entries");
  require(h_dn.size() == N, "h_dn", "must have N entries");
  require(h_ud.rows() == N && h_ud.cols() == N, "h_ud", "must be N x N");
  require(h_uu.rows() == N && h_uu.cols() == N, "h_uu", "must be N x N");
  require(h_dd.rows() == N && h_dd.cols() == N, "h_dd", "must be N x N");
  require(max_abs(h_uu - h_uu.transpose()) <= kSymTol, "h_uu", "must be symmetric");
  require(max_abs(h_dd - h_dd.transpose()) <= kSymTol, "h_dd", "must be symmetric");
  if (!allow_non_hermitian) {
    require(max_abs(h_up - h_dn) <= kSymTol, "h_up",
            "Hermitian model requires h_up == h_dn (set allow_non_hermitian to override)");
    require(max_abs(h_uu - h_dd) <= kSymTol, "h_uu",
            "Hermitian model requires h_uu == h_dd (set allow_non_hermitian to override)");
    require(max_abs(h_ud - h_ud.transpose()) <= kSymTol, "h_ud",
            "Hermitian model requires symmetric h_ud (set allow_non_hermitian to override)");
  }
}

void VerticalSurfaceSpec::validate() const {
  require(N >= 1, "N", "mode count must be >= 1");
  require(omega.size() == N, "omega", "must have N entries");
  for (int i = 0; i < N; ++i) require(omega[i] > 0.0, "omega", "frequencies must be positive");
  require(kappa.size() == N, "kappa", "must have N entries");
  require(Phi.rows() == N && Phi.cols() == N, "Phi", "must be N x N");
  require(max_abs(Phi - Phi.transpose()) <= kSymTol, "Phi", "must be symmetric");
  require(std::isfinite(E_vert), "E_vert", "must be finite");
}

ModelKind model_kind(const Model& m) {
  if (std::holds_alternative<OneBodyFermionModel>(m)) return ModelKind::fermion;
  if (std::holds_alternative<BosonQuadraticModel>(m)) return ModelKind::boson;
  return ModelKind::surface;
}

namespace {

const char* kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::fermion: return "fermion";
    case ModelKind::boson: return "boson";
    default: return "surface";
  }
}

Model parse_model(const json& j, const std::string& path) {
  if (!j.contains("kind") || !j["kind"].is_string())
    throw ParseError(path + ": missing string field 'kind'");
  const std::string kind = j["kind"].get<std::string>();

  if (kind == "fermion") {
    OneBodyFermionModel m;
    m.M = j.value("M", 0);
    m.n_el = j.value("n_el", 0);
    m.units = j.value("units", "unitless");
    m.E0 = j.value("E0", 0.0);
    if (!j.contains("h")) throw ParseError(path + ": fermion model requires field 'h'");
    Eigen::MatrixXd re = to_matrix(j["h"], "h", m.M, m.M);
    Eigen::MatrixXd im = Eigen::MatrixXd::Zero(m.M, m.M);
    if (j.contains("h_im")) im = to_matrix(j["h_im"], "h_im", m.M, m.M);
    m.h = re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
    m.validate();
    return m;
  }
  if (kind == "boson") {
    BosonQuadraticModel m;
    m.N = j.value("N", 0);
    m.units = j.value("units", "cm-1");
    m.allow_non_hermitian = j.value("allow_non_hermitian", false);
    if (!j.contains("omega")) throw ParseError(path + ": boson model requires field 'omega'");
    m.omega = to_vector(j["omega"], "omega", m.N);
    m.h0 = j.value("h0", 0.0);
    m.h_up = j.contains("h_up") ? to_vector(j["h_up"], "h_up", m.N) : Eigen::VectorXd::Zero(m.N);
    m.h_dn = j.contains("h_dn") ? to_vector(j["h_dn"], "h_dn", m.N) : Eigen::VectorXd::Zero(m.N);
    m.h_ud = j.contains("h_ud") ? to_matrix(j["h_ud"], "h_ud", m.N, m.N)
                                : Eigen::MatrixXd::Zero(m.N, m.N);
    m.h_uu = j.contains("h_uu") ? to_matrix(j["h_uu"], "h_uu", m.N, m.N)
                                : Eigen::MatrixXd::Zero(m.N, m.N);
    m.h_dd = j.contains("h_dd") ? to_matrix(j["h_dd"], "h_dd", m.N, m.N)
                                : Eigen::MatrixXd::Zero(m.N, m.N);
    m.validate();
    return m;
  }
  if (kind == "surface") {
    VerticalSurfaceSpec m;
    m.N = j.value("N", 0);
    if (!j.contains("omega")) throw ParseError(path + ": surface model requires field 'omega'");
    m.omega = to_vector(j["omega"], "omega", m.N);
    m.E_vert = j.value("E_vert", 0.0);
    m.kappa = j.contains("kappa") ? to_vector(j["kappa"], "kappa", m.N) : Eigen::VectorXd::Zero(m.N);
    if (!j.contains("Phi")) throw ParseError(path + ": surface model requires field 'Phi'");
    m.Phi = to_matrix(j["Phi"], "Phi", m.N, m.N);
    m.validate();
    return m;
  }
  throw ParseError(path + ": unknown kind '" + kind + "'");
}

}  // namespace

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return parse_model(j, path);
}

Model load_model(const std::string& path, ModelKind kind) {
  Model m = load_model(path);
  if (model_kind(m) != kind)
    throw ValidationError(path + ": expected kind '" + kind_name(kind) + "', file holds '" +
                          kind_name(model_kind(m)) + "'");
  return m;
}

void save_model(const Model& model, const std::string& path) {
  json j;
  if (const auto* f = std::get_if<OneBodyFermionModel>(&model)) {
    j["kind"] = "fermion";
    j["units"] = f->units;
    j["M"] = f->M;
    j["n_el"] = f->n_el;
    j["E0"] = f->E0;
    j["h"] = from_matrix(f->h.real());
    if (f->h.imag().cwiseAbs().maxCoeff() > 0.0) j["h_im"] = from_matrix(f->h.imag());
  } else if (const auto* b = std::get_if<BosonQuadraticModel>(&model)) {
    j["kind"] = "boson";
    j["units"] = b->units;
    j["N"] = b->N;
    j["omega"] = from_vector(b->omega);
    j["h0"] = b->h0;
    j["h_up"] = from_vector(b->h_up);
    j["h_dn"] = from_vector(b->h_dn);
    j["h_ud"] = from_matrix(b->h_ud);
    j["h_uu"] = from_matrix(b->h_uu);
    j["h_dd"] = from_matrix(b->h_dd);
    if (b->allow_non_hermitian) j["allow_non_hermitian"] = true;
  } else {
    const auto& s = std::get<VerticalSurfaceSpec>(model);
    j["kind"] = "surface";
    j["units"] = "cm-1";
    j["N"] = s.N;
    j["omega"] = from_vector(s.omega);
    j["E_vert"] = s.E_vert;
    j["kappa"] = from_vector(s.kappa);
    j["Phi"] = from_matrix(s.Phi);
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

NormalOrderedFermion normal_order_fermion(const OneBodyFermionModel& model,
                                          const ContractionScheme& scheme) {
  scheme.validate(model.M);
  NormalOrderedFermion out;
  out.h0 = model.E0;
  for (int p = 0; p < model.M; ++p) out.h0 += scheme.f[p] * std::real(model.h(p, p));
  out.h_dot = model.h;
  return out;
}

BosonQuadraticModel assemble_excited_surface(const VerticalSurfaceSpec& spec) {
  spec.validate();
  const int N = spec.N;
  BosonQuadraticModel m;
  m.N = N;
  m.omega = spec.omega;
  m.h0 = spec.E_vert + 0.25 * spec.Phi.trace() + 0.25 * spec.omega.sum();
  m.h_up = spec.kappa / std::sqrt(2.0);
  m.h_dn = m.h_up;
  Eigen::MatrixXd W = Eigen::MatrixXd(spec.omega.asDiagonal());
  m.h_ud = 0.5 * (spec.Phi + W);
  m.h_uu = 0.5 * (spec.Phi - W);
  m.h_dd = m.h_uu;
  m.validate();
  return m;
}

}  // namespace noe
