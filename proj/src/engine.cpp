#include "mstnpi/engine.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

namespace mstnpi {

namespace {

CVector spin_state(bool up) {
  CVector v = CVector::Zero(4);
  v(up ? 0 : 3) = 1.0;
  return v;
}

}  // namespace

MatrixProductState named_initial_state(const std::string& name, std::size_t num_sites) {
  std::vector<CVector> sites;
  for (std::size_t i = 0; i < num_sites; ++i) {
    if (name == "all_up") sites.push_back(spin_state(true));
    else if (name == "all_down") sites.push_back(spin_state(false));
    else if (name == "neel") sites.push_back(spin_state(i % 2 == 0));
    else throw ParameterError("initial_state: unknown product state '" + name + "' (expected all_up|all_down|neel)");
  }
  return product_mps(sites);
}

Engine::Engine(SimulationConfig config)
    : Engine(config, named_initial_state(config.initial_state, config.model.num_sites)) {}

Engine::Engine(SimulationConfig config, MatrixProductState initial) : config_(std::move(config)) {
  config_.validate();
  warn_ = [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };
  const auto params = config_.truncation();
  propagator_ = build_fb_mpo(config_.model, config_.dt, params);
  factors_ = split_fb_mpo(propagator_, params);
  if (config_.bath) {
    eta_ = eta_coefficients(*config_.bath, config_.dt, config_.memory_length);
    if (eta_->is_zero()) eta_.reset();
  }
  init(std::move(initial));
}

void Engine::init(MatrixProductState initial) {
  const std::size_t p = config_.model.num_sites;
  if (initial.length() != p) throw ParameterError("initial_state: MPS length does not match P");
  for (const auto& s : initial.sites)
    if (s.dim() != 4) throw ParameterError("initial_state: site dimension must be 4");
  c0_ = initial.chain;
  c0_points_ = initial.sites;
  c0_edges_.assign(p, Index());
  columns_.clear();
  GridColumn col0;
  col0.time_point = 0;
  col0.role = ColumnRole::Initial;
  col0.points = initial.sites;
  col0.r.assign(p, std::nullopt);
  col0.u.assign(p, std::nullopt);
  columns_.push_back(std::move(col0));
  row_ = InfluenceRow();
  row_.append_point();
  step_ = 0;
  history_.clear();
  current_ = std::move(initial);
}

GridColumn Engine::make_column(std::size_t time_point, const std::vector<Index>* in_bonds) const {
  const std::size_t p = factors_.length();
  GridColumn col;
  col.time_point = time_point;
  col.role = in_bonds ? ColumnRole::Terminal : ColumnRole::Initial;
  col.r.assign(p, std::nullopt);
  col.u.assign(p, std::nullopt);
  for (std::size_t i = 0; i < p; ++i) {
    col.points.emplace_back(4, IndexKind::Site, "s" + std::to_string(i + 1) + "@" + std::to_string(time_point));
    if (in_bonds) {
      Tensor r = factors_.r[i].replaced(factors_.temporal_bonds[i], (*in_bonds)[i]);
      col.r[i] = r.replaced(factors_.out_sites[i], col.points[i]);
    }
  }
  if (in_bonds) col.in_bonds = *in_bonds;
  return col;
}

void Engine::attach_u(GridColumn& col) const {
  const std::size_t p = factors_.length();
  col.spatial.clear();
  col.out_bonds.clear();
  for (const auto& b : factors_.spatial_bonds) col.spatial.push_back(b.fresh());
  for (std::size_t i = 0; i < p; ++i) {
    col.out_bonds.push_back(factors_.temporal_bonds[i].fresh());
    Tensor u = factors_.u[i].replaced(factors_.in_sites[i], col.points[i]);
    u = u.replaced(factors_.temporal_bonds[i], col.out_bonds[i]);
    if (i > 0) u = u.replaced(factors_.spatial_bonds[i - 1], col.spatial[i - 1]);
    if (i + 1 < p) u = u.replaced(factors_.spatial_bonds[i], col.spatial[i]);
    col.u[i] = std::move(u);
  }
  col.role = col.r[0] ? ColumnRole::Intermediate : ColumnRole::Initial;
}

TensorChain Engine::absorb_column(const TensorChain& state, const GridColumn& col, const InfluenceRow& row,
                                  std::vector<Index>& edges, bool open_points) const {
  const std::size_t p = state.size();
  const std::size_t j = col.time_point;
  const Tensor& g_shared = row.tensor(j);
  std::optional<Index> left;
  if (j == row.first()) left = row.edge();
  else left = row.chain().bonds[j - row.first() - 1];
  const std::optional<Index> right = row.right_bond(j);
  std::vector<Index> next_edges(p);
  const bool with_u = !open_points && col.u[0].has_value();
  const auto params = config_.truncation();

  // site i of the state times the column's R, G and (unless the points stay open) U
  auto absorb_site = [&](Tensor t, std::size_t i) {
    Tensor g = g_shared.replaced(row.point(j), col.points[i]);
    if (left) g = g.replaced(*left, edges[i]);
    if (right) {
      next_edges[i] = right->fresh();
      g = g.replaced(*right, next_edges[i]);
    }
    if (col.r[i]) t = contract(t, *col.r[i]);
    t = contract(t, g, {col.points[i]});
    if (with_u) t = contract(t, *col.u[i]);
    return t;
  };

  TensorChain out;
  if (!with_u || p == 1) {
    for (std::size_t i = 0; i < p; ++i) out.tensors.push_back(absorb_site(state.tensors[i], i));
    out.bonds = state.bonds;
  } else {
    // zip-up: truncate each bond as soon as it is formed, so the product of
    // state and propagator bonds never appears at full size
    TruncationParams zip = params;
    zip.cutoff *= 0.1;
    std::optional<Tensor> carry;
    for (std::size_t i = 0; i < p; ++i) {
      Tensor t = carry ? contract(*carry, state.tensors[i]) : state.tensors[i];
      t = absorb_site(std::move(t), i);
      if (i + 1 == p) {
        out.tensors.push_back(std::move(t));
        break;
      }
      std::vector<Index> rows;
      for (const auto& ix : t.indices())
        if (ix != state.bonds[i] && ix != col.spatial[i]) rows.push_back(ix);
      // the Gram route cannot resolve weights near machine precision, so tight cutoffs keep the full SVD
      SvdResult res = zip.cutoff >= 1e-12
                          ? gram_truncate(t, rows, zip, IndexKind::SpatialBond, state.bonds[i].tag())
                          : svd_truncate(t, rows, zip, Absorb::Right, IndexKind::SpatialBond, state.bonds[i].tag());
      out.tensors.push_back(std::move(res.u));
      out.bonds.push_back(res.bond);
      carry = std::move(res.v);
    }
  }
  edges = std::move(next_edges);
  compress(out, params, IndexKind::SpatialBond);
  return out;
}

TensorChain Engine::observe_chain() const {
  InfluenceRow row = row_;
  const std::size_t n = step_;
  // the terminal factor is used once, so it is folded in without truncation
  if (eta_ && n > 0) row.apply_factor(*eta_, n, n, std::nullopt);
  TensorChain state = c0_;
  std::vector<Index> edges = c0_edges_;
  for (const auto& col : columns_) state = absorb_column(state, col, row, edges, col.time_point == n);
  return state;
}

void Engine::step() {
  const std::size_t n = step_ + 1;
  const auto params = config_.truncation();
  // the previous final point becomes interior: fold in its factor
  if (eta_) row_.apply_factor(*eta_, n - 1, n, params);
  attach_u(columns_.back());
  columns_.push_back(make_column(n, &columns_.back().out_bonds));
  row_.append_point();
  // retire the column that left the memory window
  if (columns_.size() > config_.memory_length + 1) {
    c0_ = absorb_column(c0_, columns_.front(), row_, c0_edges_, false);
    row_.retire_first();
    columns_.erase(columns_.begin());
  }
  step_ = n;
  TensorChain chain = observe_chain();
  current_.chain = std::move(chain);
  current_.sites = columns_.back().points;
  record();
}

void Engine::run(std::size_t steps) {
  for (std::size_t s = 0; s < steps; ++s) step();
}

void Engine::record() {
  StepRecord rec;
  rec.step = step_;
  rec.time = config_.dt * static_cast<double>(step_);
  if (passengers_.empty()) {
    rec.trace = trace(current_);
    if (config_.renormalize && std::abs(rec.trace) > 0.0) {
      const cplx inv = 1.0 / rec.trace;
      c0_.tensors[0] = c0_.tensors[0].scaled(inv);
      current_.chain.tensors[0] = current_.chain.tensors[0].scaled(inv);
    } else if (std::abs(rec.trace - 1.0) > kTraceWarning && warn_) {
      std::ostringstream msg;
      msg << "trace drift " << std::abs(rec.trace - 1.0) << " at step " << step_;
      warn_(msg.str());
    }
    for (const auto& o : config_.observables)
      rec.observables.push_back(expectation(current_, o.site, observable_matrix(o.op)));
    rec.bonds = bond_stats(current_);
  }
  history_.push_back(std::move(rec));
}

MatrixProductState Engine::density_at() const { return current_; }

MatrixProductOperator Engine::augmented_propagator(std::size_t n) const {
  if (n > config_.memory_length)
    throw ParameterError("augmented_propagator: n exceeds the memory window (need n <= L)");
  const std::size_t p = config_.model.num_sites;
  // identity initial state: site leg tied to a passenger input leg
  MatrixProductOperator op;
  MatrixProductState start;
  for (std::size_t i = 0; i < p; ++i) {
    start.sites.emplace_back(4, IndexKind::Site, "site" + std::to_string(i + 1));
    op.in_sites.emplace_back(4, IndexKind::Site, "site" + std::to_string(i + 1));
    start.chain.tensors.push_back(Tensor::identity(op.in_sites[i], start.sites[i]));
  }
  for (std::size_t b = 0; b + 1 < p; ++b) {
    Index bond(1, IndexKind::SpatialBond, "alpha" + std::to_string(b + 1));
    start.chain.bonds.push_back(bond);
    start.chain.tensors[b] = start.chain.tensors[b].with_unit_index(bond);
    start.chain.tensors[b + 1] = start.chain.tensors[b + 1].with_unit_index(bond);
  }
  Engine e = *this;
  e.warn_ = nullptr;
  e.passengers_ = op.in_sites;
  e.init(start);
  e.run(n);
  op.chain = e.current_.chain;
  op.out_sites = e.current_.sites;
  return op;
}

}  // namespace mstnpi
