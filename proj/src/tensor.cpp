#include "mstnpi/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mstnpi {

namespace {

std::atomic<std::uint64_t> next_index_id{1};

thread_local TruncationRecorder* active_recorder = nullptr;

using RowMajorMap = Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

std::string describe(const Index& idx) {
  std::ostringstream os;
  os << "Index(id=" << idx.id() << ", dim=" << idx.dim() << ", " << to_string(idx.kind());
  if (!idx.tag().empty()) os << ", '" << idx.tag() << "'";
  os << ")";
  return os.str();
}

bool contains(const std::vector<Index>& v, const Index& idx) {
  return std::find(v.begin(), v.end(), idx) != v.end();
}

}  // namespace

const char* to_string(IndexKind kind) {
  switch (kind) {
    case IndexKind::Site: return "site";
    case IndexKind::SpatialBond: return "spatial-bond";
    case IndexKind::TemporalBond: return "temporal-bond";
    case IndexKind::Aux: return "aux";
  }
  return "?";
}

Index::Index(std::size_t dim, IndexKind kind, std::string tag)
    : id_(next_index_id.fetch_add(1, std::memory_order_relaxed)),
      dim_(dim),
      kind_(kind),
      tag_(std::move(tag)) {
  if (dim == 0) throw ParameterError("Index dimension must be >= 1");
}

std::size_t product_of_dims(const std::vector<Index>& indices) {
  std::size_t n = 1;
  for (const auto& i : indices) n *= i.dim();
  return n;
}

Tensor::Tensor() : data_(1, cplx{0.0, 0.0}) {}

Tensor::Tensor(std::vector<Index> indices, std::vector<cplx> data)
    : indices_(std::move(indices)), data_(std::move(data)) {
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i].id() == 0) throw StructuralError("Tensor built with a default (null) Index");
    for (std::size_t j = i + 1; j < indices_.size(); ++j)
      if (indices_[i] == indices_[j])
        throw StructuralError("duplicate index in tensor: " + describe(indices_[i]));
  }
  if (data_.size() != product_of_dims(indices_))
    throw StructuralError("tensor data length " + std::to_string(data_.size()) +
                          " does not match index dimensions " +
                          std::to_string(product_of_dims(indices_)));
}

Tensor Tensor::zeros(std::vector<Index> indices) {
  const auto n = product_of_dims(indices);
  return Tensor(std::move(indices), std::vector<cplx>(n, cplx{0.0, 0.0}));
}

Tensor Tensor::scalar(cplx value) { return Tensor({}, {value}); }

Tensor Tensor::identity(const Index& a, const Index& b) {
  if (a.dim() != b.dim()) throw StructuralError("identity needs legs of equal dimension");
  Tensor t = zeros({a, b});
  for (std::size_t i = 0; i < a.dim(); ++i) t.data_[i * b.dim() + i] = 1.0;
  return t;
}

Tensor Tensor::from_matrix(const CMatrix& m, const std::vector<Index>& rows,
                           const std::vector<Index>& cols) {
  const auto nr = product_of_dims(rows);
  const auto nc = product_of_dims(cols);
  if (static_cast<std::size_t>(m.rows()) != nr || static_cast<std::size_t>(m.cols()) != nc)
    throw StructuralError("from_matrix: matrix shape does not match index dimensions");
  std::vector<Index> all = rows;
  all.insert(all.end(), cols.begin(), cols.end());
  std::vector<cplx> data(nr * nc);
  RowMajorMap(data.data(), static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc)) = m;
  return Tensor(std::move(all), std::move(data));
}

Tensor Tensor::from_vector(const CVector& v, const Index& idx) {
  if (static_cast<std::size_t>(v.size()) != idx.dim())
    throw StructuralError("from_vector: length does not match index dimension");
  return Tensor({idx}, std::vector<cplx>(v.data(), v.data() + v.size()));
}

bool Tensor::has(const Index& idx) const { return contains(indices_, idx); }

std::size_t Tensor::position(const Index& idx) const {
  auto it = std::find(indices_.begin(), indices_.end(), idx);
  if (it == indices_.end()) throw StructuralError("tensor has no " + describe(idx));
  return static_cast<std::size_t>(it - indices_.begin());
}

std::optional<Index> Tensor::find_tag(const std::string& tag) const {
  for (const auto& i : indices_)
    if (i.tag() == tag) return i;
  return std::nullopt;
}

std::size_t Tensor::offset(std::span<const std::size_t> pos) const {
  if (pos.size() != indices_.size()) throw StructuralError("element access with wrong rank");
  std::size_t off = 0;
  for (std::size_t k = 0; k < pos.size(); ++k) {
    if (pos[k] >= indices_[k].dim()) throw StructuralError("element position out of range");
    off = off * indices_[k].dim() + pos[k];
  }
  return off;
}

cplx Tensor::operator()(std::initializer_list<std::size_t> pos) const {
  return data_[offset(std::span<const std::size_t>(pos.begin(), pos.size()))];
}
cplx& Tensor::operator()(std::initializer_list<std::size_t> pos) {
  return data_[offset(std::span<const std::size_t>(pos.begin(), pos.size()))];
}
cplx Tensor::at(std::span<const std::size_t> pos) const { return data_[offset(pos)]; }
cplx& Tensor::at(std::span<const std::size_t> pos) { return data_[offset(pos)]; }

cplx Tensor::scalar_value() const {
  if (!indices_.empty()) throw StructuralError("scalar_value on a tensor of rank > 0");
  return data_[0];
}

Tensor Tensor::permuted(const std::vector<Index>& order) const {
  if (order.size() != indices_.size()) throw StructuralError("permutation has wrong rank");
  const std::size_t r = order.size();
  std::vector<std::size_t> src_axis(r);
  bool trivial = true;
  for (std::size_t k = 0; k < r; ++k) {
    src_axis[k] = position(order[k]);
    if (src_axis[k] != k) trivial = false;
  }
  if (trivial) return *this;

  std::vector<std::size_t> src_stride(r, 1);
  for (std::size_t k = r; k-- > 1;) src_stride[k - 1] = src_stride[k] * indices_[k].dim();

  // Walk the output in row-major order; the innermost output axis is handled
  // by a tight strided loop.
  std::vector<cplx> out(data_.size());
  const std::size_t inner_dim = order[r - 1].dim();
  const std::size_t inner_stride = src_stride[src_axis[r - 1]];
  std::vector<std::size_t> counter(r, 0);
  std::size_t src = 0;
  std::size_t dst = 0;
  const std::size_t outer = data_.size() / inner_dim;
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t s = src;
    for (std::size_t i = 0; i < inner_dim; ++i, s += inner_stride) out[dst++] = data_[s];
    for (std::size_t k = r - 1; k-- > 0;) {
      const auto ax = src_axis[k];
      if (++counter[k] < order[k].dim()) {
        src += src_stride[ax];
        break;
      }
      src -= src_stride[ax] * (order[k].dim() - 1);
      counter[k] = 0;
    }
  }
  return Tensor(order, std::move(out));
}

Tensor Tensor::replaced(const Index& old_idx, const Index& new_idx) const {
  if (old_idx.dim() != new_idx.dim()) throw StructuralError("replaced: dimension mismatch");
  if (old_idx != new_idx && has(new_idx)) throw StructuralError("replaced: target index already present");
  Tensor t = *this;
  t.indices_[position(old_idx)] = new_idx;
  return t;
}

Tensor Tensor::fused(const std::vector<Index>& legs, const Index& into) const {
  if (product_of_dims(legs) != into.dim()) throw StructuralError("fused: dimension mismatch");
  std::vector<Index> order;
  for (const auto& i : indices_)
    if (!contains(legs, i)) order.push_back(i);
  for (const auto& l : legs) {
    if (!has(l)) throw StructuralError("fused: leg not present");
    order.push_back(l);
  }
  Tensor t = permuted(order);
  t.indices_.resize(order.size() - legs.size());
  t.indices_.push_back(into);
  return Tensor(std::move(t.indices_), std::move(t.data_));
}

Tensor Tensor::split(const Index& from, const std::vector<Index>& parts) const {
  if (product_of_dims(parts) != from.dim()) throw StructuralError("split: dimension mismatch");
  const auto pos = position(from);
  std::vector<Index> idx;
  idx.insert(idx.end(), indices_.begin(), indices_.begin() + static_cast<std::ptrdiff_t>(pos));
  idx.insert(idx.end(), parts.begin(), parts.end());
  idx.insert(idx.end(), indices_.begin() + static_cast<std::ptrdiff_t>(pos) + 1, indices_.end());
  return Tensor(std::move(idx), data_);
}

Tensor Tensor::with_unit_index(const Index& unit) const {
  if (unit.dim() != 1) throw StructuralError("with_unit_index needs a dimension-1 index");
  auto idx = indices_;
  idx.push_back(unit);
  return Tensor(std::move(idx), data_);
}

Tensor Tensor::without_unit_index(const Index& unit) const {
  if (unit.dim() != 1) throw StructuralError("without_unit_index needs a dimension-1 index");
  auto idx = indices_;
  idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(position(unit)));
  return Tensor(std::move(idx), data_);
}

Tensor Tensor::conj() const {
  Tensor t = *this;
  for (auto& x : t.data_) x = std::conj(x);
  return t;
}

Tensor Tensor::scaled(cplx factor) const {
  Tensor t = *this;
  for (auto& x : t.data_) x *= factor;
  return t;
}

double Tensor::norm() const {
  double s = 0.0;
  for (const auto& x : data_) s += std::norm(x);
  return std::sqrt(s);
}

CMatrix Tensor::matrix(const std::vector<Index>& rows, const std::vector<Index>& cols) const {
  if (rows.size() + cols.size() != indices_.size())
    throw StructuralError("matrix: row/col indices do not partition the tensor");
  std::vector<Index> order = rows;
  order.insert(order.end(), cols.begin(), cols.end());
  const Tensor t = permuted(order);
  return ConstRowMajorMap(t.data_.data(), static_cast<Eigen::Index>(product_of_dims(rows)),
                          static_cast<Eigen::Index>(product_of_dims(cols)));
}

CVector Tensor::vector(const std::vector<Index>& order) const {
  const Tensor t = permuted(order);
  return Eigen::Map<const CVector>(t.data_.data(), static_cast<Eigen::Index>(t.data_.size()));
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  const Tensor bb = b.permuted(a.indices_);
  Tensor t = a;
  for (std::size_t i = 0; i < t.data_.size(); ++i) t.data_[i] += bb.data_[i];
  return t;
}

Tensor operator-(const Tensor& a, const Tensor& b) { return a + b.scaled(-1.0); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
  const Tensor bb = b.permuted(a.indices());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - bb.data()[i]));
  return m;
}

Tensor contract(const Tensor& a, const Tensor& b) { return contract(a, b, {}); }

Tensor contract(const Tensor& a, const Tensor& b, const std::vector<Index>& keep) {
  std::vector<Index> batch, a_free, summed, b_free;
  for (const auto& i : a.indices()) {
    if (b.has(i)) {
      if (b.index(b.position(i)).dim() != i.dim())
        throw StructuralError("contract: shared index with mismatched dims " + describe(i));
      (contains(keep, i) ? batch : summed).push_back(i);
    } else {
      a_free.push_back(i);
    }
  }
  for (const auto& k : keep)
    if (!contains(batch, k)) throw StructuralError("contract: kept index not shared " + describe(k));
  for (const auto& i : b.indices())
    if (!a.has(i)) b_free.push_back(i);

  std::vector<Index> a_order = batch;
  a_order.insert(a_order.end(), a_free.begin(), a_free.end());
  a_order.insert(a_order.end(), summed.begin(), summed.end());
  std::vector<Index> b_order = batch;
  b_order.insert(b_order.end(), summed.begin(), summed.end());
  b_order.insert(b_order.end(), b_free.begin(), b_free.end());

  const Tensor ap = a.permuted(a_order);
  const Tensor bp = b.permuted(b_order);
  const auto nb = static_cast<Eigen::Index>(product_of_dims(batch));
  const auto na = static_cast<Eigen::Index>(product_of_dims(a_free));
  const auto ns = static_cast<Eigen::Index>(product_of_dims(summed));
  const auto nf = static_cast<Eigen::Index>(product_of_dims(b_free));

  std::vector<Index> res_idx = batch;
  res_idx.insert(res_idx.end(), a_free.begin(), a_free.end());
  res_idx.insert(res_idx.end(), b_free.begin(), b_free.end());
  std::vector<cplx> out(static_cast<std::size_t>(nb * na * nf));
  for (Eigen::Index k = 0; k < nb; ++k) {
    ConstRowMajorMap am(ap.data().data() + k * na * ns, na, ns);
    ConstRowMajorMap bm(bp.data().data() + k * ns * nf, ns, nf);
    RowMajorMap cm(out.data() + k * na * nf, na, nf);
    cm.noalias() = am * bm;
  }
  Tensor res(std::move(res_idx), std::move(out));

  std::vector<Index> final_order;
  for (const auto& i : a.indices())
    if (!contains(summed, i)) final_order.push_back(i);
  final_order.insert(final_order.end(), b_free.begin(), b_free.end());
  return res.permuted(final_order);
}

std::size_t truncation_rank(std::span<const double> s, double cutoff) {
  const std::size_t n = s.size();
  if (n == 0) return 0;
  // tail[r] = sum_{k >= r} s_k^2, summed from the small end for accuracy
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) tail[k] = tail[k + 1] + s[k] * s[k];
  const double total = tail[0];
  if (total <= 0.0) return 1;
  constexpr double zero_floor = 1e-28;
  std::size_t r = n;
  for (std::size_t k = 1; k <= n; ++k) {
    const double rel = tail[k] / total;
    if (rel < cutoff || rel <= zero_floor) {
      r = k;
      break;
    }
  }
  while (r < n && s[r] >= s[r - 1] * (1.0 - 1e-12) && s[r - 1] > 0.0) ++r;
  return r;
}

namespace {

// Divide-and-conquer SVD, checked against its own residual. Eigen 3.4's
// BDCSVD occasionally returns a wrong factorization (seen: 20% residual on a
// 64x64 block); those blocks are redone with the slower one-sided Jacobi.
void checked_svd(const CMatrix& m, CMatrix& u, Eigen::VectorXd& s, CMatrix& v) {
  Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  u = svd.matrixU();
  s = svd.singularValues();
  v = svd.matrixV();
  const double scale = m.norm();
  const double tol = 1e-12 * static_cast<double>(std::max(m.rows(), m.cols()));
  if ((m * v - u * s.asDiagonal()).norm() <= tol * scale) return;
  Eigen::JacobiSVD<CMatrix> jacobi(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  u = jacobi.matrixU();
  s = jacobi.singularValues();
  v = jacobi.matrixV();
}

// m = U diag(s) V^dag. Strongly rectangular matrices are reduced by a QR step
// first, which is much cheaper than a bidiagonalization of the full matrix.
void thin_svd(const CMatrix& m, CMatrix& u, Eigen::VectorXd& s, CMatrix& v) {
  const Eigen::Index rows = m.rows(), cols = m.cols();
  if (rows >= 2 * cols) {
    Eigen::HouseholderQR<CMatrix> qr(m);
    const CMatrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    CMatrix small_u;
    checked_svd(r, small_u, s, v);
    u = CMatrix::Zero(rows, cols);
    u.topRows(cols) = small_u;
    u.applyOnTheLeft(qr.householderQ());
  } else if (cols >= 2 * rows) {
    thin_svd(m.adjoint(), v, s, u);
  } else {
    checked_svd(m, u, s, v);
  }
}

}  // namespace

SvdResult svd_truncate(const Tensor& t, const std::vector<Index>& row_indices,
                       const TruncationParams& params, Absorb absorb, IndexKind bond_kind,
                       const std::string& bond_tag) {
  if (params.cutoff < 0.0 || params.cutoff >= 1.0)
    throw ParameterError("svd_truncate: cutoff must satisfy 0 <= cutoff < 1");
  if (row_indices.empty() || row_indices.size() >= t.rank())
    throw ParameterError("svd_truncate: row indices must be a nonempty proper subset");
  std::vector<Index> cols;
  for (const auto& i : t.indices())
    if (!contains(row_indices, i)) cols.push_back(i);
  if (cols.size() + row_indices.size() != t.rank())
    throw StructuralError("svd_truncate: row index not present in tensor");

  const CMatrix m = t.matrix(row_indices, cols);
  CMatrix full_u, full_v;
  Eigen::VectorXd sv;
  thin_svd(m, full_u, sv, full_v);
  std::vector<double> s(sv.data(), sv.data() + sv.size());

  double total = 0.0;
  for (double x : s) total += x * x;
  std::size_t r = truncation_rank(s, params.cutoff);
  if (params.max_dim) r = std::min(r, std::max<std::size_t>(1, *params.max_dim));
  r = std::max<std::size_t>(r, 1);
  double discarded = 0.0;
  for (std::size_t k = r; k < s.size(); ++k) discarded += s[k] * s[k];

  if (active_recorder) active_recorder->record({s.size(), r, discarded, total});

  const auto ri = static_cast<Eigen::Index>(r);
  CMatrix u = full_u.leftCols(ri);
  CMatrix v = full_v.leftCols(ri).adjoint();
  Eigen::VectorXd kept = sv.head(ri);
  switch (absorb) {
    case Absorb::None: break;
    case Absorb::Left: u = u * kept.asDiagonal(); break;
    case Absorb::Right: v = kept.asDiagonal() * v; break;
    case Absorb::Sqrt: {
      const Eigen::VectorXd root = kept.cwiseSqrt();
      u = u * root.asDiagonal();
      v = root.asDiagonal() * v;
      break;
    }
  }

  SvdResult res;
  res.bond = Index(r, bond_kind, bond_tag);
  res.u = Tensor::from_matrix(u, row_indices, {res.bond});
  res.v = Tensor::from_matrix(v, {res.bond}, cols);
  res.singular.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(r));
  res.discarded_weight = discarded;
  res.total_weight = total;
  return res;
}

SvdResult gram_truncate(const Tensor& t, const std::vector<Index>& row_indices, const TruncationParams& params,
                        IndexKind bond_kind, const std::string& bond_tag) {
  std::vector<Index> cols;
  for (const auto& i : t.indices())
    if (!contains(row_indices, i)) cols.push_back(i);
  if (product_of_dims(row_indices) < 2 * product_of_dims(cols))
    return svd_truncate(t, row_indices, params, Absorb::Right, bond_kind, bond_tag);
  if (params.cutoff < 0.0 || params.cutoff >= 1.0)
    throw ParameterError("gram_truncate: cutoff must satisfy 0 <= cutoff < 1");
  if (cols.size() + row_indices.size() != t.rank())
    throw StructuralError("gram_truncate: row index not present in tensor");

  CMatrix m = t.matrix(row_indices, cols);
  const Eigen::Index n = m.cols();
  CMatrix gram = CMatrix::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram.selfadjointView<Eigen::Lower>());
  // eigenvalues ascend; singular values descend
  std::vector<double> s(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) s[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, eig.eigenvalues()(n - 1 - k)));

  double total = 0.0;
  for (double x : s) total += x * x;
  std::size_t r = truncation_rank(s, params.cutoff);
  if (params.max_dim) r = std::min(r, std::max<std::size_t>(1, *params.max_dim));
  r = std::max<std::size_t>(r, 1);
  double discarded = 0.0;
  for (std::size_t k = r; k < s.size(); ++k) discarded += s[k] * s[k];
  if (active_recorder) active_recorder->record({s.size(), r, discarded, total});

  const auto ri = static_cast<Eigen::Index>(r);
  const CMatrix kept = eig.eigenvectors().rightCols(ri).rowwise().reverse();
  CMatrix w = m * kept;
  m.resize(0, 0);
  Eigen::HouseholderQR<CMatrix> qr(w);
  const CMatrix upper = qr.matrixQR().topRows(ri).triangularView<Eigen::Upper>();
  CMatrix u = CMatrix::Identity(w.rows(), ri);
  u.applyOnTheLeft(qr.householderQ());
  w.resize(0, 0);

  SvdResult res;
  res.bond = Index(r, bond_kind, bond_tag);
  res.u = Tensor::from_matrix(u, row_indices, {res.bond});
  res.v = Tensor::from_matrix(upper * kept.adjoint(), {res.bond}, cols);
  res.singular.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(r));
  res.discarded_weight = discarded;
  res.total_weight = total;
  return res;
}

TruncationRecorder::TruncationRecorder() : previous_(active_recorder) { active_recorder = this; }
TruncationRecorder::~TruncationRecorder() { active_recorder = previous_; }

}  // namespace mstnpi
