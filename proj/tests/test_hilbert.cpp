#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "oracles.hpp"
#include "pcsft/error.hpp"
#include "pcsft/hilbert.hpp"
#include "pcsft/random_matrices.hpp"
#include "pcsft/serialize.hpp"

using namespace pcsft;
using namespace std::complex_literals;

namespace {

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

CMatrix mat2(Complex a, Complex b, Complex c, Complex d) {
  CMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

oracle::Mat to_oracle(const CMatrix& m) {
  oracle::Mat o = oracle::zeros(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) o[i][j] = m(i, j);
  return o;
}

oracle::Vec to_oracle(const FieldVector& v) {
  oracle::Vec o(v.dim());
  for (std::size_t k = 0; k < v.dim(); ++k) o[k] = v[k];
  return o;
}

}  // namespace

TEST_CASE("field vector basics") {
  const FieldVector phi{1.0, 1i};
  CHECK(phi.dim() == 2);
  CHECK(phi.squared_norm() == doctest::Approx(2.0));
  CHECK_THROWS_AS(FieldVector(CVector(0)), DomainError);
  CHECK_THROWS_AS(phi + FieldVector::zero(3), DimensionMismatch);
  CHECK(FieldVector::basis(3, 2)[2] == Complex(1.0));
  CHECK_THROWS(FieldVector::basis(3, 3));
}

TEST_CASE("inner product is conjugate-linear in the second slot") {
  const FieldVector u{1.0, 0.0}, v{1i, 0.0};
  // <u, i e0> = 1 * conj(i) = -i
  CHECK(std::abs(inner(u, v) - Complex(0, -1)) < 1e-15);
  CHECK(std::abs(inner(v, u) - Complex(0, 1)) < 1e-15);
}

TEST_CASE("hermitian operator construction") {
  CHECK_NOTHROW(HermitianOperator(mat2(1, 2.0 + 1i, 2.0 - 1i, 3)));
  CHECK_THROWS_AS(HermitianOperator(mat2(1, 2, 0, 3)), DomainError);
  CHECK_THROWS_AS(HermitianOperator(mat2(1i, 0, 0, 1)), DomainError);
  // Symmetrization is explicit only.
  const auto s = HermitianOperator::symmetrized(mat2(1, 2, 0, 3));
  CHECK(s(0, 1) == Complex(1.0));
  CHECK(hermiticity_defect(mat2(1, 2, 0, 3)) == doctest::Approx(2.0));

  CounterRng rng(RandomSeed{3}, 0);
  for (std::size_t n = 2; n <= 6; ++n) {
    const auto a = random_hermitian(n, rng);
    const RVector w = a.eigenvalues();
    for (Eigen::Index k = 1; k < w.size(); ++k) CHECK(w(k - 1) <= w(k));
    CHECK(std::abs(w.sum() - a.trace()) < 1e-12);
  }
}

TEST_CASE("density operator invariants") {
  CHECK_NOTHROW(DensityOperator(HermitianOperator::diagonal({0.9, 0.1})));
  CHECK_THROWS_AS(DensityOperator(HermitianOperator::diagonal({0.9, 0.2})), DomainError);
  CHECK_THROWS_AS(DensityOperator(HermitianOperator::diagonal({1.5, -0.5})), DomainError);
  CHECK(max_abs(DensityOperator::maximally_mixed(4).op().matrix() - CMatrix::Identity(4, 4) / 4.0) < 1e-15);
}

TEST_CASE("projector_from_state examples") {
  const double r = 1 / std::sqrt(2.0);
  CHECK(max_abs(projector_from_state(FieldVector{1.0, 0.0}).matrix() - mat2(1, 0, 0, 0)) < 1e-15);
  CHECK(max_abs(projector_from_state(FieldVector{r, r}).matrix() - mat2(0.5, 0.5, 0.5, 0.5)) < 1e-15);
  CHECK(max_abs(projector_from_state(FieldVector{r, r * 1i}).matrix() - mat2(0.5, -0.5i, 0.5i, 0.5)) < 1e-15);
  CHECK_THROWS_AS(projector_from_state(FieldVector::zero(2)), DomainError);
  // Unnormalized input is normalized.
  CHECK(max_abs(projector_from_state(FieldVector{3.0, 0.0}).matrix() - mat2(1, 0, 0, 0)) < 1e-15);
}

TEST_CASE("projector is idempotent with unit trace for random states") {
  CounterRng rng(RandomSeed{11}, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + trial % 15;
    const auto p = projector_from_state(random_state(n, rng)).matrix();
    CHECK(max_abs(p * p - p) <= 1e-12);
    CHECK(std::abs(p.trace() - 1.0) <= 1e-12);
  }
}

TEST_CASE("trace_product examples") {
  const auto z = HermitianOperator::diagonal({1.0, -1.0});
  CHECK(trace_product(HermitianOperator::identity(2) * 0.5, z) == doctest::Approx(0.0));
  CHECK(trace_product(HermitianOperator::diagonal({1.0, 0.0}), z) == doctest::Approx(1.0));
  CHECK(trace_product(HermitianOperator(mat2(0.5, 0.5, 0.5, 0.5)), HermitianOperator(mat2(0, 1, 1, 0))) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(trace_product(HermitianOperator::identity(2), HermitianOperator::identity(3)), DimensionMismatch);
}

TEST_CASE("trace_product is bilinear and unitarily invariant") {
  CounterRng rng(RandomSeed{12}, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 6;
    const auto d = random_density(n, rng).op();
    const auto a = random_hermitian(n, rng);
    const auto b = random_hermitian(n, rng);
    const auto d2 = random_density(n, rng).op();
    CHECK(std::abs(trace_product(d, a * 2.5 + b) - (2.5 * trace_product(d, a) + trace_product(d, b))) < 1e-12);
    CHECK(std::abs(trace_product(d * 0.3 + d2, a) - (0.3 * trace_product(d, a) + trace_product(d2, a))) < 1e-12);
    const CMatrix u = random_unitary(n, rng);
    CHECK(max_abs(u.adjoint() * u - CMatrix::Identity(n, n)) < 1e-12);
    const auto ud = HermitianOperator::symmetrized(u * d.matrix() * u.adjoint());
    const auto ua = HermitianOperator::symmetrized(u * a.matrix() * u.adjoint());
    CHECK(std::abs(trace_product(ud, ua) - trace_product(d, a)) <= 1e-10);
    // Against a loop-based trace.
    CHECK(std::abs(oracle::trace(oracle::matmul(to_oracle(d.matrix()), to_oracle(a.matrix()))).real() -
                   trace_product(d, a)) < 1e-12);
  }
}

TEST_CASE("tensor products") {
  CHECK(max_abs(tensor_product(HermitianOperator::identity(2), HermitianOperator::identity(2)).matrix() -
                CMatrix::Identity(4, 4)) == 0.0);
  CHECK(max_abs(tensor_product(HermitianOperator::diagonal({1.0, -1.0}), HermitianOperator::identity(2)).matrix() -
                HermitianOperator::diagonal({1.0, 1.0, -1.0, -1.0}).matrix()) == 0.0);

  CounterRng rng(RandomSeed{13}, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_hermitian(2 + trial % 3, rng);
    const auto b = random_hermitian(2 + trial % 2, rng);
    const auto ref = oracle::kron(to_oracle(a.matrix()), to_oracle(b.matrix()));
    const auto k = tensor_product(a, b).matrix();
    double err = 0;
    for (Eigen::Index i = 0; i < k.rows(); ++i)
      for (Eigen::Index j = 0; j < k.cols(); ++j) err = std::max(err, std::abs(k(i, j) - ref[i][j]));
    CHECK(err == 0.0);

    const auto u = random_state(2, rng), v = random_state(3, rng);
    const auto uv = kron_vector(u, v);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(uv[i * 3 + j] == u[i] * v[j]);
  }
}

TEST_CASE("bipartite reshaping and partial traces") {
  CounterRng rng(RandomSeed{14}, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t da = 2 + trial % 2, db = 2 + (trial / 2) % 3;
    const auto psi = random_state(da * db, rng);
    const CMatrix m = reshape_bipartite(psi, da, db);
    CHECK(m(da - 1, 0) == psi[(da - 1) * db]);
    const auto r1 = to_oracle(reduced_first(psi, da, db).matrix());
    const auto r2 = to_oracle(reduced_second(psi, da, db).matrix());
    const auto o1 = oracle::partial_trace_second(to_oracle(psi), da, db);
    const auto o2 = oracle::partial_trace_first(to_oracle(psi), da, db);
    for (std::size_t i = 0; i < da; ++i)
      for (std::size_t j = 0; j < da; ++j) CHECK(std::abs(r1[i][j] - o1[i][j]) < 1e-14);
    for (std::size_t i = 0; i < db; ++i)
      for (std::size_t j = 0; j < db; ++j) CHECK(std::abs(r2[i][j] - o2[i][j]) < 1e-14);
  }
  CHECK_THROWS_AS(reshape_bipartite(FieldVector::zero(4), 3, 2), DimensionMismatch);
}

TEST_CASE("expectation matches the loop oracle") {
  CounterRng rng(RandomSeed{15}, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 7;
    const auto a = random_hermitian(n, rng);
    const auto psi = random_state(n, rng);
    CHECK(std::abs(expectation(a, psi) - oracle::expectation(to_oracle(a.matrix()), to_oracle(psi))) < 1e-13);
  }
}

TEST_CASE("riemann-silberstein packaging") {
  const auto e1 = riemann_silberstein({RVector::Unit(2, 0), RVector::Zero(2)});
  CHECK(e1[0] == Complex(1.0));
  CHECK(e1[1] == Complex(0.0));
  const auto e2 = riemann_silberstein({RVector::Zero(2), RVector::Ones(2)});
  CHECK(e2[0] == Complex(0, 1));
  CHECK(e2[1] == Complex(0, 1));
  RVector e(2), b(2);
  e << 3, 0;
  b << 4, 0;
  CHECK(riemann_silberstein({e, b}).squared_norm() == doctest::Approx(25.0));
  CHECK_THROWS_AS(riemann_silberstein({RVector::Zero(2), RVector::Zero(3)}), DimensionMismatch);

  CounterRng rng(RandomSeed{16}, 0);
  for (int trial = 0; trial < 100; ++trial) {
    RVector ee(5), bb(5);
    for (int k = 0; k < 5; ++k) {
      ee(k) = rng.normal();
      bb(k) = rng.normal();
    }
    const auto phi = riemann_silberstein({ee, bb});
    const auto back = split_riemann_silberstein(phi);
    CHECK(back.electric == ee);
    CHECK(back.magnetic == bb);
    CHECK(std::abs(phi.squared_norm() - (ee.squaredNorm() + bb.squaredNorm())) <= 1e-12);
  }
}

TEST_CASE("json round trip of vectors and matrices") {
  CounterRng rng(RandomSeed{17}, 0);
  const auto a = random_hermitian(3, rng);
  const Json j = to_json(a);
  CHECK(matrix_from_json(j) == a.matrix());
  const auto psi = random_state(4, rng);
  CHECK(vector_from_json(to_json(psi)) == psi.components());
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(std::numbers::pi)) == std::numbers::pi);
}
