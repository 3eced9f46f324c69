#include "mstnpi/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace mstnpi {

void write_mps(std::ostream& os, const MatrixProductState& state) {
  const std::size_t p = state.length();
  os << "mstnpi-mps 1\n";
  os << "sites " << p << "\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < p; ++i) {
    Tensor t = state[i];
    Index left(1, IndexKind::SpatialBond), right(1, IndexKind::SpatialBond);
    if (i > 0) left = state.chain.bonds[i - 1];
    else t = t.with_unit_index(left);
    if (i + 1 < p) right = state.chain.bonds[i];
    else t = t.with_unit_index(right);
    t = t.permuted({left, state.sites[i], right});
    os << "site " << i + 1 << " " << left.dim() << " " << state.sites[i].dim() << " " << right.dim() << "\n";
    for (const cplx& v : t.data()) os << v.real() << " " << v.imag() << "\n";
  }
}

MatrixProductState read_mps(std::istream& is) {
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "mstnpi-mps" || version != 1)
    throw ParameterError("MPS file: expected header 'mstnpi-mps 1'");
  std::size_t p = 0;
  if (!(is >> tag >> p) || tag != "sites" || p == 0) throw ParameterError("MPS file: expected 'sites <P>'");
  MatrixProductState st;
  Index prev;
  for (std::size_t i = 0; i < p; ++i) {
    std::size_t idx = 0, l = 0, d = 0, r = 0;
    if (!(is >> tag >> idx >> l >> d >> r) || tag != "site" || idx != i + 1)
      throw ParameterError("MPS file: bad header for site " + std::to_string(i + 1));
    if ((i == 0 && l != 1) || (i + 1 == p && r != 1)) throw ParameterError("MPS file: edge bonds must be 1");
    if (i > 0 && l != prev.dim()) throw ParameterError("MPS file: bond dimension mismatch at site " + std::to_string(i + 1));
    Index left = i > 0 ? prev : Index(1, IndexKind::SpatialBond);
    Index site(d, IndexKind::Site, "site" + std::to_string(i + 1));
    Index right(r, IndexKind::SpatialBond, "alpha" + std::to_string(i + 1));
    std::vector<cplx> data(l * d * r);
    for (auto& v : data) {
      double re = 0, im = 0;
      if (!(is >> re >> im)) throw ParameterError("MPS file: truncated data at site " + std::to_string(i + 1));
      v = cplx(re, im);
    }
    Tensor t({left, site, right}, std::move(data));
    if (i == 0) t = t.without_unit_index(left);
    if (i + 1 == p) t = t.without_unit_index(right);
    else st.chain.bonds.push_back(right);
    st.chain.tensors.push_back(std::move(t));
    st.sites.push_back(site);
    prev = right;
  }
  return st;
}

void save_mps(const std::string& path, const MatrixProductState& state) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write MPS file '" + path + "'");
  write_mps(out, state);
}

MatrixProductState load_mps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("initial_state: cannot open MPS file '" + path + "'");
  return read_mps(in);
}

void write_trajectory_csv(std::ostream& os, const SimulationConfig& config, const std::vector<StepRecord>& history) {
  os << "step,time,site,observable,value_re,value_im\n";
  os << std::setprecision(17);
  for (const auto& rec : history) {
    if (rec.step == 0) continue;
    for (std::size_t k = 0; k < config.observables.size(); ++k) {
      const auto& o = config.observables[k];
      os << rec.step << "," << rec.time << "," << o.site + 1 << "," << to_string(o.op) << ","
         << rec.observables[k].real() << "," << rec.observables[k].imag() << "\n";
    }
  }
}

void write_bond_csv(std::ostream& os, const std::vector<StepRecord>& history) {
  os << "step,time,max_bond,avg_bond\n";
  os << std::setprecision(17);
  for (const auto& rec : history) {
    if (rec.step == 0) continue;
    os << rec.step << "," << rec.time << "," << rec.bonds.max_dim << "," << rec.bonds.mean_dim << "\n";
  }
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::json j;
  j["config"] = m.config_text;
  j["version"] = m.version;
  j["wall_seconds"] = m.wall_seconds;
  j["dt"] = m.dt;
  j["memory_L"] = m.memory_length;
  j["chi"] = m.cutoff;
  j["oracle"] = m.oracle;
  j["scan"] = m.scan;
  j["outputs"] = m.outputs;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  RunManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.config_text = j.at("config").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.wall_seconds = j.at("wall_seconds").get<double>();
    m.dt = j.at("dt").get<double>();
    m.memory_length = j.at("memory_L").get<std::size_t>();
    m.cutoff = j.at("chi").get<double>();
    m.oracle = j.at("oracle").get<std::string>();
    m.scan = j.at("scan").get<std::string>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("manifest: ") + e.what());
  }
  return m;
}

}  // namespace mstnpi
