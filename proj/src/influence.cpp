#include "mstnpi/influence.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mstnpi {

WindowKind window_kind(std::size_t k, std::size_t final_point) {
  if (k == 0) return WindowKind::Initial;
  if (k == final_point) return WindowKind::Terminal;
  return WindowKind::Interior;
}

TimeWindow time_window(std::size_t k, std::size_t final_point, double dt) {
  if (k > final_point) throw ParameterError("time_window: point beyond the final point");
  const double t = dt * static_cast<double>(k);
  if (final_point == 0) return {0.0, 0.0};
  switch (window_kind(k, final_point)) {
    case WindowKind::Initial: return {dt / 4.0, dt / 2.0};
    case WindowKind::Terminal: return {t - dt / 4.0, dt / 2.0};
    case WindowKind::Interior: break;
  }
  return {t, dt};
}

EtaTable::EtaTable(double dt, std::size_t memory)
    : dt_(dt), memory_(memory), cross_(4 * (memory + 1), cplx(0.0)) {}

std::size_t EtaTable::slot(WindowKind later, WindowKind earlier, std::size_t separation) const {
  if (later == WindowKind::Initial || earlier == WindowKind::Terminal)
    throw ParameterError("eta: invalid window pairing");
  if (separation < 1 || separation > memory_) throw ParameterError("eta: pair outside memory");
  const std::size_t block = (later == WindowKind::Terminal ? 2 : 0) + (earlier == WindowKind::Interior ? 1 : 0);
  return block * (memory_ + 1) + separation;
}

cplx EtaTable::cross(WindowKind later, WindowKind earlier, std::size_t separation) const {
  return cross_[slot(later, earlier, separation)];
}
cplx& EtaTable::cross(WindowKind later, WindowKind earlier, std::size_t separation) {
  return cross_[slot(later, earlier, separation)];
}

cplx EtaTable::eta(std::size_t k, std::size_t kp, std::size_t final_point) const {
  if (kp > k || k > final_point) throw ParameterError("eta: need k' <= k <= final point");
  if (k - kp > memory_) throw ParameterError("eta: pair outside memory");
  if (final_point == 0) return 0.0;
  if (k == kp) return self(window_kind(k, final_point));
  return cross(window_kind(k, final_point), window_kind(kp, final_point), k - kp);
}

bool EtaTable::is_zero() const {
  auto zero = [](cplx v) { return v == cplx(0.0); };
  return std::all_of(self_.begin(), self_.end(), zero) && std::all_of(cross_.begin(), cross_.end(), zero);
}

EtaTable eta_coefficients(const BathModel& bath, double dt, std::size_t memory) {
  if (!(dt > 0.0)) throw ParameterError("dt: must be positive");
  if (memory < 1) throw ParameterError("memory_L: need L >= 1");
  bath.validate();
  EtaTable table(dt, memory);
  table.set_coupling_values(bath.coupling_eigenvalues());
  table.self(WindowKind::Initial) = window_self_integral(bath, {dt / 4.0, dt / 2.0});
  table.self(WindowKind::Interior) = window_self_integral(bath, {0.0, dt});
  table.self(WindowKind::Terminal) = table.self(WindowKind::Initial);
  const TimeWindow initial{dt / 4.0, dt / 2.0};
  for (std::size_t j = 1; j <= memory; ++j) {
    const double t = dt * static_cast<double>(j);
    const TimeWindow interior_late{t, dt};
    const TimeWindow terminal_late{t - dt / 4.0, dt / 2.0};
    const TimeWindow interior_early{0.0, dt};
    table.cross(WindowKind::Interior, WindowKind::Interior, j) =
        window_pair_integral(bath, interior_late, interior_early);
    table.cross(WindowKind::Interior, WindowKind::Initial, j) =
        window_pair_integral(bath, interior_late, initial);
    table.cross(WindowKind::Terminal, WindowKind::Interior, j) =
        window_pair_integral(bath, terminal_late, interior_early);
    table.cross(WindowKind::Terminal, WindowKind::Initial, j) =
        window_pair_integral(bath, terminal_late, initial);
  }
  return table;
}

std::string eta_cache_key(const BathModel& bath, double dt, std::size_t memory) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << (bath.spectral == SpectralKind::Ohmic ? "ohmic" : "discrete");
  if (bath.spectral == SpectralKind::Ohmic) os << " xi=" << bath.xi << " omega_c=" << bath.omega_c;
  else
    for (const auto& m : bath.modes) os << " mode=" << m.frequency << ":" << m.coupling;
  os << " beta=" << bath.beta << " coupling=";
  for (double s : bath.coupling_eigenvalues()) os << s << ",";
  os << " dt=" << dt << " L=" << memory;
  return os.str();
}

namespace {
const char* kind_name(WindowKind k) {
  switch (k) {
    case WindowKind::Initial: return "initial";
    case WindowKind::Interior: return "interior";
    case WindowKind::Terminal: return "terminal";
  }
  return "?";
}
WindowKind kind_from_name(const std::string& s) {
  if (s == "initial") return WindowKind::Initial;
  if (s == "interior") return WindowKind::Interior;
  if (s == "terminal") return WindowKind::Terminal;
  throw ParameterError("eta cache: unknown window kind '" + s + "'");
}
}  // namespace

void write_eta_table(std::ostream& os, const EtaTable& table, const std::string& key) {
  os << "mstnpi-eta 1\n";
  os << "key " << key << "\n";
  os << std::setprecision(17);
  os << "dt " << table.dt() << "\n";
  os << "memory " << table.memory() << "\n";
  os << "coupling";
  for (double s : table.coupling_values()) os << " " << s;
  os << "\n";
  for (auto k : {WindowKind::Initial, WindowKind::Interior, WindowKind::Terminal})
    os << "self " << kind_name(k) << " " << table.self(k).real() << " " << table.self(k).imag() << "\n";
  for (auto late : {WindowKind::Interior, WindowKind::Terminal})
    for (auto early : {WindowKind::Initial, WindowKind::Interior})
      for (std::size_t j = 1; j <= table.memory(); ++j) {
        const cplx v = table.cross(late, early, j);
        os << "cross " << kind_name(late) << " " << kind_name(early) << " " << j << " " << v.real() << " "
           << v.imag() << "\n";
      }
}

bool read_eta_table(std::istream& is, const std::string& key, EtaTable& table) {
  std::string line;
  if (!std::getline(is, line) || line != "mstnpi-eta 1") throw ParameterError("eta cache: bad header");
  if (!std::getline(is, line) || line.rfind("key ", 0) != 0) throw ParameterError("eta cache: missing key");
  if (line.substr(4) != key) return false;
  double dt = 0.0;
  std::size_t memory = 0;
  std::vector<double> coupling;
  std::vector<std::string> body;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "dt") ls >> dt;
    else if (tag == "memory") ls >> memory;
    else if (tag == "coupling") {
      double s;
      while (ls >> s) coupling.push_back(s);
    } else if (!tag.empty()) body.push_back(line);
  }
  EtaTable t(dt, memory);
  t.set_coupling_values(coupling);
  for (const auto& b : body) {
    std::istringstream ls(b);
    std::string tag, k1, k2;
    double re = 0, im = 0;
    std::size_t j = 0;
    ls >> tag;
    if (tag == "self") {
      ls >> k1 >> re >> im;
      t.self(kind_from_name(k1)) = cplx(re, im);
    } else if (tag == "cross") {
      ls >> k1 >> k2 >> j >> re >> im;
      t.cross(kind_from_name(k1), kind_from_name(k2), j) = cplx(re, im);
    } else {
      throw ParameterError("eta cache: unexpected line '" + b + "'");
    }
    if (ls.fail()) throw ParameterError("eta cache: malformed line '" + b + "'");
  }
  table = std::move(t);
  return true;
}

EtaTable cached_eta_coefficients(const BathModel& bath, double dt, std::size_t memory,
                                 const std::string& path) {
  const std::string key = eta_cache_key(bath, dt, memory);
  {
    std::ifstream in(path);
    EtaTable t;
    if (in && read_eta_table(in, key, t)) return t;
  }
  EtaTable t = eta_coefficients(bath, dt, memory);
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path);
  if (!out) throw ParameterError("eta cache: cannot write '" + path + "'");
  write_eta_table(out, t, key);
  return t;
}

InfluenceFactor if_factor(const EtaTable& eta, std::size_t k, std::size_t kp, std::size_t final_point) {
  const cplx e = eta.eta(k, kp, final_point);
  const auto& s = eta.coupling_values();
  const std::size_t d = s.size();
  InfluenceFactor f{k, kp, CMatrix(d * d, d * d)};
  for (std::size_t p = 0; p < d * d; ++p)
    for (std::size_t q = 0; q < d * d; ++q) {
      const double ds_k = s[p / d] - s[p % d];
      const double ds_kp = s[q / d] - s[q % d];
      const double sbar_kp = (s[q / d] + s[q % d]) / 2.0;
      f.table(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) =
          std::exp(-ds_k * (e.real() * ds_kp + cplx(0.0, 2.0 * e.imag() * sbar_kp)));
    }
  return f;
}

DiagonalTimeChain if_factor_chain(const EtaTable& eta, std::size_t k, std::size_t first,
                                  std::size_t final_point) {
  if (first > k) throw ParameterError("if_factor_chain: empty span");
  if (k - first > eta.memory()) throw ParameterError("if_factor_chain: span exceeds the memory");
  const std::size_t dd = eta.coupling_values().size() * eta.coupling_values().size();
  DiagonalTimeChain out;
  out.first = first;
  for (std::size_t j = first; j <= k; ++j)
    out.points.emplace_back(dd, IndexKind::Site, "t" + std::to_string(j));
  const std::size_t n = k - first + 1;
  for (std::size_t j = 0; j + 1 < n; ++j) out.chain.bonds.emplace_back(dd, IndexKind::TemporalBond, "f");
  const InfluenceFactor self = if_factor(eta, k, k, final_point);
  if (n == 1) {
    Tensor t = Tensor::zeros({out.points[0]});
    for (std::size_t p = 0; p < dd; ++p) t({p}) = self(p, p);
    out.chain.tensors.push_back(t);
    return out;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t time = first + j;
    const Index& pt = out.points[j];
    if (j + 1 == n) {
      Tensor t = Tensor::zeros({out.chain.bonds[j - 1], pt});
      for (std::size_t p = 0; p < dd; ++p) t({p, p}) = self(p, p);
      out.chain.tensors.push_back(t);
      continue;
    }
    const InfluenceFactor f = if_factor(eta, k, time, final_point);
    if (j == 0) {
      Tensor t = Tensor::zeros({pt, out.chain.bonds[0]});
      for (std::size_t p = 0; p < dd; ++p)
        for (std::size_t b = 0; b < dd; ++b) t({p, b}) = f(b, p);
      out.chain.tensors.push_back(t);
    } else {
      Tensor t = Tensor::zeros({out.chain.bonds[j - 1], pt, out.chain.bonds[j]});
      for (std::size_t p = 0; p < dd; ++p)
        for (std::size_t b = 0; b < dd; ++b) t({b, p, b}) = f(b, p);
      out.chain.tensors.push_back(t);
    }
  }
  return out;
}

MatrixProductOperator build_if_mpo(const EtaTable& eta, std::size_t k, std::size_t first,
                                   std::size_t final_point) {
  DiagonalTimeChain diag = if_factor_chain(eta, k, first, final_point);
  MatrixProductOperator op;
  op.chain.bonds = diag.chain.bonds;
  for (std::size_t j = 0; j < diag.points.size(); ++j) {
    const Index& p = diag.points[j];
    Index in = p.fresh(), out = p.fresh();
    Tensor delta = Tensor::zeros({p, in, out});
    for (std::size_t v = 0; v < p.dim(); ++v) delta({v, v, v}) = 1.0;
    op.chain.tensors.push_back(contract(diag.chain.tensors[j], delta));
    op.in_sites.push_back(in);
    op.out_sites.push_back(out);
  }
  return op;
}

std::optional<Index> InfluenceRow::right_bond(std::size_t k) const {
  const std::size_t j = k - first_;
  if (j + 1 >= chain_.size()) return std::nullopt;
  return chain_.bonds[j];
}

void InfluenceRow::append_point() {
  const std::size_t k = empty() ? 0 : last() + 1;
  Index p(4, IndexKind::Site, "t" + std::to_string(k));
  Tensor t(std::vector<Index>{p}, std::vector<cplx>(4, cplx(1.0)));
  if (!empty()) {
    Index b(1, IndexKind::TemporalBond, "g");
    chain_.tensors.back() = chain_.tensors.back().with_unit_index(b);
    t = t.with_unit_index(b);
    chain_.bonds.push_back(b);
  }
  chain_.tensors.push_back(t);
  points_.push_back(p);
}

void InfluenceRow::apply_factor(const EtaTable& eta, std::size_t k, std::size_t final_point,
                                const std::optional<TruncationParams>& params) {
  if (empty() || k != last()) throw StructuralError("InfluenceRow: factor must end at the last point");
  if (points_.front().dim() != eta.coupling_values().size() * eta.coupling_values().size())
    throw StructuralError("InfluenceRow: point dimension does not match the coupling operator");
  const std::size_t start = k >= eta.memory() ? std::max(first_, k - eta.memory()) : first_;
  DiagonalTimeChain f = if_factor_chain(eta, k, start, final_point);
  const std::size_t off = start - first_;
  TensorChain sub;
  std::vector<std::vector<Index>> keep;
  for (std::size_t j = off; j < chain_.size(); ++j) {
    sub.tensors.push_back(chain_.tensors[j]);
    if (j + 1 < chain_.size()) sub.bonds.push_back(chain_.bonds[j]);
    f.chain.tensors[j - off] = f.chain.tensors[j - off].replaced(f.points[j - off], points_[j]);
    keep.push_back({points_[j]});
  }
  TensorChain zipped = zip_chains(sub, f.chain, keep, IndexKind::TemporalBond);
  for (std::size_t j = off; j < chain_.size(); ++j) {
    chain_.tensors[j] = zipped.tensors[j - off];
    if (j + 1 < chain_.size()) chain_.bonds[j] = zipped.bonds[j - off];
  }
  if (params) compress(chain_, *params, IndexKind::TemporalBond);
}

Tensor InfluenceRow::retire_first() {
  if (chain_.size() < 2) throw StructuralError("InfluenceRow: cannot retire the only point");
  Tensor t = chain_.tensors.front();
  edge_ = chain_.bonds.front();
  chain_.tensors.erase(chain_.tensors.begin());
  chain_.bonds.erase(chain_.bonds.begin());
  points_.erase(points_.begin());
  ++first_;
  return t;
}

}  // namespace mstnpi
