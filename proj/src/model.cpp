#include "mstnpi/model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

namespace mstnpi {

namespace pauli {
CMatrix identity() { return CMatrix::Identity(2, 2); }
CMatrix x() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
CMatrix y() {
  CMatrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}
CMatrix z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
}  // namespace pauli

ModelKind parse_model_kind(const std::string& name) {
  if (name == "ising") return ModelKind::Ising;
  if (name == "xxz") return ModelKind::XXZ;
  if (name == "heisenberg") return ModelKind::Heisenberg;
  throw ParameterError("model: unknown model '" + name + "' (expected ising|xxz|heisenberg)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Ising: return "ising";
    case ModelKind::XXZ: return "xxz";
    case ModelKind::Heisenberg: return "heisenberg";
  }
  return "?";
}

void SpinChainModel::validate() const {
  if (num_sites < 1) throw ParameterError("P: need at least one site");
  if (local_dim != 2) throw ParameterError("local dimension must be 2");
  for (double v : {eps, omega, jx, jy, jz})
    if (!std::isfinite(v)) throw ParameterError("model couplings must be finite");
  if (kind == ModelKind::Ising && (jx != 0.0 || jy != 0.0))
    throw ParameterError("Jx/Jy: the Ising model has Jx = Jy = 0");
  if (kind == ModelKind::XXZ && jx != jy) throw ParameterError("Jx/Jy: the XXZ model has Jx = Jy");
}

CMatrix one_body_term(const SpinChainModel& model, std::size_t site) {
  if (site >= model.num_sites) throw ParameterError("one_body_term: site out of range");
  return model.eps * pauli::z() - model.omega * pauli::x();
}

CMatrix two_body_term(const SpinChainModel& model, std::size_t site) {
  if (site + 1 >= model.num_sites) throw ParameterError("two_body_term: bond out of range");
  using Eigen::kroneckerProduct;
  return model.jx * CMatrix(kroneckerProduct(pauli::x(), pauli::x())) +
         model.jy * CMatrix(kroneckerProduct(pauli::y(), pauli::y())) +
         model.jz * CMatrix(kroneckerProduct(pauli::z(), pauli::z()));
}

namespace {

// Embeds an operator acting on `span` consecutive sites starting at `first`.
CMatrix embed(const CMatrix& local, std::size_t first, std::size_t span, std::size_t num_sites) {
  using Eigen::kroneckerProduct;
  CMatrix left = CMatrix::Identity(1 << first, 1 << first);
  const std::size_t rest = num_sites - first - span;
  CMatrix right = CMatrix::Identity(1 << rest, 1 << rest);
  return kroneckerProduct(kroneckerProduct(left, local).eval(), right);
}

}  // namespace

CMatrix dense_hamiltonian(const SpinChainModel& model) {
  model.validate();
  const std::size_t p = model.num_sites;
  if (p > 12) throw ParameterError("dense_hamiltonian: chain too long for dense work");
  const std::size_t dim = std::size_t{1} << p;
  CMatrix h = CMatrix::Zero(dim, dim);
  for (std::size_t i = 0; i < p; ++i) h += embed(one_body_term(model, i), i, 1, p);
  for (std::size_t i = 0; i + 1 < p; ++i) h += embed(two_body_term(model, i), i, 2, p);
  return h;
}

void BathModel::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ParameterError("beta: must be > 0");
  if (spectral == SpectralKind::Ohmic) {
    if (!(xi >= 0.0) || !std::isfinite(xi)) throw ParameterError("xi: must be >= 0");
    if (!(omega_c > 0.0) || !std::isfinite(omega_c)) throw ParameterError("omega_c: must be > 0");
  } else {
    for (const auto& m : modes)
      if (!(m.frequency > 0.0) || !std::isfinite(m.coupling))
        throw ParameterError("bath_modes: frequencies must be > 0 and couplings finite");
  }
  if (coupling_operator.rows() != 2 || coupling_operator.cols() != 2)
    throw ParameterError("coupling operator must be 2x2");
  if (!coupling_operator.isDiagonal(1e-14))
    throw ParameterError("coupling operator must be diagonal in the site basis");
  if (!coupling_operator.isApprox(coupling_operator.adjoint()))
    throw ParameterError("coupling operator must be Hermitian");
}

double BathModel::spectral_density(double w) const {
  return std::numbers::pi / 2.0 * xi * w * std::exp(-w / omega_c);
}

std::vector<double> BathModel::coupling_eigenvalues() const {
  std::vector<double> s;
  for (Eigen::Index i = 0; i < coupling_operator.rows(); ++i) s.push_back(coupling_operator(i, i).real());
  return s;
}

BathModel discretize_ohmic(const BathModel& ohmic, std::size_t num_modes, double w_max) {
  if (ohmic.spectral != SpectralKind::Ohmic) throw ParameterError("discretize_ohmic: needs an Ohmic bath");
  if (num_modes == 0 || !(w_max > 0.0)) throw ParameterError("discretize_ohmic: bad grid");
  BathModel out = ohmic;
  out.spectral = SpectralKind::Discrete;
  out.modes.clear();
  const double dw = w_max / static_cast<double>(num_modes);
  for (std::size_t l = 1; l <= num_modes; ++l) {
    const double w = dw * static_cast<double>(l);
    const double c2 = 2.0 / std::numbers::pi * w * ohmic.spectral_density(w) * dw;
    out.modes.push_back({w, std::sqrt(c2)});
  }
  return out;
}

CMatrix observable_matrix(Observable o) {
  switch (o) {
    case Observable::Sx: return pauli::x();
    case Observable::Sy: return pauli::y();
    case Observable::Sz: return pauli::z();
  }
  return pauli::identity();
}

std::string to_string(Observable o) {
  switch (o) {
    case Observable::Sx: return "sx";
    case Observable::Sy: return "sy";
    case Observable::Sz: return "sz";
  }
  return "?";
}

void SimulationConfig::validate() const {
  model.validate();
  if (bath) bath->validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("dt: must be > 0");
  if (num_steps < 1) throw ParameterError("nsteps: must be >= 1");
  if (memory_length < 1 || memory_length > num_steps)
    throw ParameterError("memory_L: L out of range (need 1 <= L <= nsteps)");
  if (!(cutoff >= 0.0 && cutoff < 1.0)) throw ParameterError("chi: must satisfy 0 <= chi < 1");
  if (max_dim && *max_dim < 1) throw ParameterError("max_dim: must be >= 1");
  for (const auto& o : observables)
    if (o.site >= model.num_sites) throw ParameterError("observables: site out of range");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParameterError(key + ": expected a number, got '" + v + "'");
  }
}

std::size_t to_count(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size() || x < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
    throw ParameterError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<ObservableRequest> parse_observables(const std::string& v, std::size_t num_sites) {
  std::vector<ObservableRequest> out;
  for (const auto& item : split(v, ',')) {
    const auto at = item.find('@');
    if (at == std::string::npos) throw ParameterError("observables: expected name@site, got '" + item + "'");
    const std::string name = item.substr(0, at);
    const std::string where = item.substr(at + 1);
    Observable op;
    if (name == "sx") op = Observable::Sx;
    else if (name == "sy") op = Observable::Sy;
    else if (name == "sz") op = Observable::Sz;
    else throw ParameterError("observables: unknown operator '" + name + "' (expected sx|sy|sz)");
    if (where == "all") {
      for (std::size_t i = 0; i < num_sites; ++i) out.push_back({i, op});
      continue;
    }
    const auto site = to_count("observables", where);
    if (site < 1 || site > num_sites) throw ParameterError("observables: site out of range in '" + item + "'");
    out.push_back({site - 1, op});
  }
  return out;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "model", "P",      "eps",      "Omega",  "Jx",      "Jy",        "Jz",
      "J",     "xi",     "omega_c",  "beta",   "bath_modes", "dt",     "nsteps",
      "memory_L", "chi", "max_dim",  "initial_state", "observables", "renormalize"};
  return keys;
}

}  // namespace

SimulationConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParameterError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end())
      throw ParameterError(key + ": unknown key");
    if (kv.count(key)) throw ParameterError(key + ": given more than once");
    kv[key] = value;
  }
  auto require = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParameterError(key + ": missing required key");
    return it->second;
  };
  auto number_or = [&](const std::string& key, double fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : to_double(key, it->second);
  };

  SimulationConfig c;
  c.model.kind = parse_model_kind(require("model"));
  c.model.num_sites = to_count("P", require("P"));
  c.model.eps = number_or("eps", 0.0);
  c.model.omega = to_double("Omega", require("Omega"));
  c.model.jz = number_or("Jz", 0.0);
  if (kv.count("J")) {
    if (c.model.kind != ModelKind::XXZ) throw ParameterError("J: only meaningful for model = xxz");
    if (kv.count("Jx") || kv.count("Jy")) throw ParameterError("J: give either J or Jx/Jy, not both");
    c.model.jx = c.model.jy = to_double("J", kv["J"]);
  } else {
    c.model.jx = number_or("Jx", 0.0);
    c.model.jy = number_or("Jy", 0.0);
  }

  if (kv.count("xi") || kv.count("bath_modes")) {
    BathModel bath;
    bath.beta = to_double("beta", require("beta"));
    if (kv.count("bath_modes")) {
      if (kv.count("xi")) throw ParameterError("bath_modes: give either xi/omega_c or bath_modes");
      bath.spectral = SpectralKind::Discrete;
      for (const auto& item : split(kv["bath_modes"], ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
          throw ParameterError("bath_modes: expected frequency:coupling pairs, got '" + item + "'");
        bath.modes.push_back({to_double("bath_modes", trim(item.substr(0, colon))),
                              to_double("bath_modes", trim(item.substr(colon + 1)))});
      }
    } else {
      bath.xi = to_double("xi", kv["xi"]);
      bath.omega_c = to_double("omega_c", require("omega_c"));
    }
    c.bath = bath;
  }

  c.dt = to_double("dt", require("dt"));
  c.num_steps = to_count("nsteps", require("nsteps"));
  if (c.bath)
    c.memory_length = to_count("memory_L", require("memory_L"));
  else
    c.memory_length = kv.count("memory_L") ? to_count("memory_L", kv["memory_L"]) : 1;
  c.cutoff = number_or("chi", 1e-11);
  if (kv.count("max_dim")) c.max_dim = to_count("max_dim", kv["max_dim"]);
  if (kv.count("initial_state")) c.initial_state = kv["initial_state"];
  if (kv.count("renormalize")) {
    const auto& v = kv["renormalize"];
    if (v != "true" && v != "false") throw ParameterError("renormalize: expected true|false");
    c.renormalize = v == "true";
  }
  c.observables = parse_observables(kv.count("observables") ? kv["observables"] : "sz@all",
                                    c.model.num_sites);
  c.validate();
  return c;
}

std::string format_config(const SimulationConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "model = " << to_string(c.model.kind) << "\n";
  os << "P = " << c.model.num_sites << "\n";
  os << "eps = " << c.model.eps << "\n";
  os << "Omega = " << c.model.omega << "\n";
  os << "Jx = " << c.model.jx << "\nJy = " << c.model.jy << "\nJz = " << c.model.jz << "\n";
  if (c.bath) {
    if (c.bath->spectral == SpectralKind::Ohmic) {
      os << "xi = " << c.bath->xi << "\nomega_c = " << c.bath->omega_c << "\n";
    } else {
      os << "bath_modes = ";
      for (std::size_t i = 0; i < c.bath->modes.size(); ++i)
        os << (i ? ", " : "") << c.bath->modes[i].frequency << ":" << c.bath->modes[i].coupling;
      os << "\n";
    }
    os << "beta = " << c.bath->beta << "\n";
  }
  os << "dt = " << c.dt << "\nnsteps = " << c.num_steps << "\nmemory_L = " << c.memory_length << "\n";
  os << "chi = " << c.cutoff << "\n";
  if (c.max_dim) os << "max_dim = " << *c.max_dim << "\n";
  os << "initial_state = " << c.initial_state << "\n";
  os << "observables = ";
  for (std::size_t i = 0; i < c.observables.size(); ++i)
    os << (i ? ", " : "") << to_string(c.observables[i].op) << "@" << c.observables[i].site + 1;
  os << "\n";
  if (c.renormalize) os << "renormalize = true\n";
  return os.str();
}

}  // namespace mstnpi
