#include <doctest.h>

#include "mstnpi/mp_algebra.hpp"
#include "mstnpi/propagator.hpp"
#include "support.hpp"

using namespace mstnpi;
using testing::max_abs;

namespace {

CVector pure_state(cplx a, cplx b) {
  CVector psi(2);
  psi << a, b;
  psi.normalize();
  return vectorize(psi * psi.adjoint());
}

CVector up() { return pure_state(1.0, 0.0); }

CVector mixed() { return vectorize(CMatrix::Identity(2, 2) * 0.5); }

}  // namespace

TEST_CASE("product mps of identical pure states") {
  MatrixProductState st = product_mps({up(), up(), up()});
  CHECK(st.length() == 3);
  CHECK(bond_stats(st).max_dim == 1);
  CHECK(std::abs(trace(st) - 1.0) <= 1e-15);
}

TEST_CASE("product mps of one mixed site keeps the input") {
  MatrixProductState st = product_mps({mixed()});
  CHECK((to_dense(st) - mixed()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("product mps matches the outer product") {
  const CVector a = pure_state(1.0, cplx(0.3, 0.4));
  const CVector b = pure_state(cplx(0.2, -0.1), 0.7);
  MatrixProductState st = product_mps({a, b});
  const CVector dense = to_dense(st);
  REQUIRE(dense.size() == 16);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) worst = std::max(worst, std::abs(dense(i * 4 + j) - a(i) * b(j)));
  CHECK(worst <= 1e-14);
  CHECK_THROWS_AS(product_mps({}), ParameterError);
}

TEST_CASE("site ordering: site 0 is the slowest factor") {
  const CMatrix rho_a = unvectorize(pure_state(1.0, 0.0), 2);
  const CMatrix rho_b = unvectorize(pure_state(0.0, 1.0), 2);
  MatrixProductState st = product_mps({vectorize(rho_a), vectorize(rho_b)});
  const CMatrix rho = density_matrix(to_dense(st), 2, 2);
  CHECK(max_abs(rho - testing::kron(rho_a, rho_b)) <= 1e-15);
  CHECK(max_abs(unvectorize(vectorize(rho_a), 2) - rho_a) == 0.0);
  CHECK((vectorize_density(rho, 2, 2) - to_dense(st)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identity mpo leaves any state unchanged") {
  std::mt19937_64 rng(1);
  MatrixProductState st = random_mps(4, 4, 3, rng);
  MatrixProductState out = apply_mpo(identity_mpo(4, 4), st, {0.0, {}});
  const CVector ref = to_dense(st);
  CHECK((to_dense(out) - ref).cwiseAbs().maxCoeff() <= 1e-13 * ref.cwiseAbs().maxCoeff());
}

TEST_CASE("apply_mpo equals the dense product at zero cutoff") {
  std::mt19937_64 rng(2);
  for (std::size_t p = 1; p <= 3; ++p)
    for (int trial = 0; trial < 3; ++trial) {
      MatrixProductOperator op = random_mpo(p, 4, 3, rng);
      MatrixProductState st = random_mps(p, 4, 2, rng);
      const CVector expect = to_dense(op) * to_dense(st);
      const CVector got = to_dense(apply_mpo(op, st, {0.0, {}}));
      CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("product operators keep unit bonds") {
  std::mt19937_64 rng(3);
  MatrixProductOperator op = random_mpo(3, 4, 1, rng);
  MatrixProductState st = product_mps({up(), mixed(), up()});
  MatrixProductState out = apply_mpo(op, st, {1e-11, {}});
  CHECK(bond_stats(out).max_dim == 1);
}

TEST_CASE("apply_mpo rejects length mismatch") {
  std::mt19937_64 rng(4);
  CHECK_THROWS_AS(apply_mpo(identity_mpo(3, 4), random_mps(2, 4, 2, rng), {0.0, {}}), StructuralError);
}

TEST_CASE("mpo_product") {
  std::mt19937_64 rng(5);
  MatrixProductOperator id = identity_mpo(2, 4);
  CHECK(max_abs(to_dense(mpo_product(id, id, {0.0, {}})) - CMatrix::Identity(16, 16)) <= 1e-14);
  MatrixProductOperator a = random_mpo(2, 4, 3, rng);
  MatrixProductOperator b = random_mpo(2, 4, 2, rng);
  const CMatrix expect = to_dense(a) * to_dense(b);
  CHECK(max_abs(to_dense(mpo_product(a, b, {0.0, {}})) - expect) <= 1e-12 * max_abs(expect));
  CHECK(max_abs(to_dense(mpo_product(a, id, {0.0, {}})) - to_dense(a)) <= 1e-13 * max_abs(to_dense(a)));
}

TEST_CASE("trace") {
  CHECK(std::abs(trace(product_mps({up(), pure_state(0.6, 0.8)})) - 1.0) <= 1e-15);
  CHECK(std::abs(trace(product_mps({mixed(), mixed(), mixed(), mixed()})) - 1.0) <= 1e-15);
  std::mt19937_64 rng(6);
  MatrixProductState st = random_mps(3, 4, 3, rng);
  const cplx dense = density_matrix(to_dense(st), 3, 2).trace();
  CHECK(std::abs(trace(st) - dense) <= 1e-13 * std::max(1.0, std::abs(dense)));
}

TEST_CASE("expectation") {
  MatrixProductState st = product_mps({up(), up(), mixed()});
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(expectation(st, i, pauli::z()) - 1.0) <= 1e-15);
  CHECK(std::abs(expectation(st, 2, pauli::z())) <= 1e-15);
  CHECK_THROWS_AS(expectation(st, 3, pauli::z()), ParameterError);

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    MatrixProductState r = random_mps(3, 4, 2, rng);
    const CMatrix rho = density_matrix(to_dense(r), 3, 2);
    const cplx tr = trace(r);
    for (std::size_t i = 0; i < 3; ++i)
      for (const CMatrix& o : {pauli::x(), pauli::y(), pauli::z()}) {
        const cplx want = (rho * testing::on_site(o, i, 3)).trace() / tr;
        CHECK(std::abs(expectation(r, i, o) / tr - want) <= 1e-12);
      }
  }
}

TEST_CASE("bond statistics") {
  auto stats = bond_stats(product_mps({up(), up(), up()}));
  CHECK(stats.max_dim == 1);
  CHECK(stats.mean_dim == 1.0);

  Index s0(4, IndexKind::Site), s1(4, IndexKind::Site), s2(4, IndexKind::Site);
  Index b0(2, IndexKind::SpatialBond), b1(4, IndexKind::SpatialBond);
  MatrixProductState st;
  st.chain.tensors = {Tensor::zeros({s0, b0}), Tensor::zeros({b0, s1, b1}), Tensor::zeros({b1, s2})};
  st.chain.bonds = {b0, b1};
  st.sites = {s0, s1, s2};
  stats = bond_stats(st);
  CHECK(stats.max_dim == 4);
  CHECK(stats.mean_dim == 3.0);
}

TEST_CASE("bond statistics agree with recorded svd ranks") {
  std::mt19937_64 rng(8);
  MatrixProductOperator op = random_mpo(4, 4, 3, rng);
  MatrixProductState st = random_mps(4, 4, 3, rng);
  TruncationRecorder rec;
  MatrixProductState out = apply_mpo(op, st, {1e-6, {}});
  // the last sweep sets every bond; its events run right to left
  REQUIRE(rec.events().size() >= 3);
  const auto& ev = rec.events();
  std::size_t max_rank = 0, total = 0;
  for (std::size_t k = ev.size() - 3; k < ev.size(); ++k) {
    max_rank = std::max(max_rank, ev[k].kept_rank);
    total += ev[k].kept_rank;
  }
  CHECK(bond_stats(out).max_dim == max_rank);
  CHECK(bond_stats(out).mean_dim == doctest::Approx(total / 3.0));
}

TEST_CASE("compression respects the cutoff") {
  std::mt19937_64 rng(9);
  MatrixProductState st = random_mps(5, 4, 8, rng);
  const CVector before = to_dense(st);
  for (double chi : {1e-2, 1e-4, 1e-8}) {
    MatrixProductState c = st;
    compress(c, {chi, {}});
    const double err = (to_dense(c) - before).norm() / before.norm();
    // one truncation per bond; the errors add at most linearly
    CHECK(err * err <= 4 * chi * 1.0001);
  }
}

TEST_CASE("trace and hermiticity under a forward-backward propagator") {
  SpinChainModel m;
  m.kind = ModelKind::Heisenberg;
  m.num_sites = 3;
  m.jz = 0.7;
  m.jx = 0.2;
  m.eps = 0.3;
  const MatrixProductOperator k = build_fb_mpo(m, 0.2, {0.0, {}});
  std::mt19937_64 rng(10);
  const CMatrix a = testing::random_matrix(8, 8, rng);
  CMatrix rho = a * a.adjoint();
  rho /= rho.trace();
  const CVector v = vectorize_density(rho, 3, 2);
  MatrixProductState st;
  {
    // exact MPS of rho by successive SVDs
    Index s0(4, IndexKind::Site), s1(4, IndexKind::Site), s2(4, IndexKind::Site);
    Tensor t({s0, s1, s2}, std::vector<cplx>(v.data(), v.data() + v.size()));
    SvdResult first = svd_truncate(t, {s0}, {0.0, {}}, Absorb::Right, IndexKind::SpatialBond);
    SvdResult second = svd_truncate(first.v, {first.bond, s1}, {0.0, {}}, Absorb::Right, IndexKind::SpatialBond);
    st.chain.tensors = {first.u, second.u, second.v};
    st.chain.bonds = {first.bond, second.bond};
    st.sites = {s0, s1, s2};
  }
  MatrixProductState out = st;
  for (int n = 0; n < 5; ++n) out = apply_mpo(k, out, {0.0, {}});
  CHECK(std::abs(trace(out) - trace(st)) <= 1e-10);
  const CMatrix r = density_matrix(to_dense(out), 3, 2);
  CHECK(max_abs(r - r.adjoint()) <= 1e-10);
}
