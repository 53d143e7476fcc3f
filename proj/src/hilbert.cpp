#include "pcsft/hilbert.hpp"

#include <cmath>
#include <string>

#include "pcsft/error.hpp"

namespace pcsft {

namespace {

void require_same_dim(const char* where, std::size_t a, std::size_t b) {
  if (a != b) throw DimensionMismatch(where, a, b);
}

}  // namespace

// ---------------------------------------------------------------- FieldVector

FieldVector::FieldVector(CVector components) : components_(std::move(components)) {
  if (components_.size() == 0) throw DomainError("FieldVector: dimension must be at least 1");
}

FieldVector::FieldVector(std::initializer_list<Complex> components)
    : FieldVector(CVector::Map(components.begin(), static_cast<Eigen::Index>(components.size()))) {}

FieldVector FieldVector::zero(std::size_t dim) {
  return FieldVector(CVector::Zero(static_cast<Eigen::Index>(dim)));
}

FieldVector FieldVector::basis(std::size_t dim, std::size_t k) {
  if (k >= dim) throw DomainError("FieldVector::basis: index out of range");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(k)) = 1.0;
  return FieldVector(std::move(v));
}

FieldVector FieldVector::normalized() const {
  const double n = norm();
  if (n == 0.0) throw DomainError("FieldVector::normalized: zero vector");
  return FieldVector(CVector(components_ / n));
}

FieldVector operator+(const FieldVector& a, const FieldVector& b) {
  require_same_dim("FieldVector +", a.dim(), b.dim());
  return FieldVector(CVector(a.components_ + b.components_));
}

FieldVector operator-(const FieldVector& a, const FieldVector& b) {
  require_same_dim("FieldVector -", a.dim(), b.dim());
  return FieldVector(CVector(a.components_ - b.components_));
}

FieldVector operator*(Complex s, const FieldVector& v) { return FieldVector(CVector(s * v.components_)); }

Complex inner(const FieldVector& u, const FieldVector& v) {
  require_same_dim("inner", u.dim(), v.dim());
  // Eigen's dot conjugates its left operand.
  return v.components().dot(u.components());
}

// ---------------------------------------------------------- HermitianOperator

double hermiticity_defect(const CMatrix& m) {
  if (m.rows() != m.cols()) return INFINITY;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

HermitianOperator::HermitianOperator(CMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw DomainError("HermitianOperator: matrix must be square and non-empty");
  }
  const double defect = hermiticity_defect(entries_);
  if (!(defect <= kHermitianTolerance)) {
    throw DomainError("HermitianOperator: max|M - M^dagger| = " + std::to_string(defect) +
                      " exceeds tolerance");
  }
}

HermitianOperator HermitianOperator::symmetrized(const CMatrix& m) {
  if (m.rows() != m.cols()) throw DomainError("HermitianOperator::symmetrized: non-square matrix");
  return HermitianOperator(CMatrix((m + m.adjoint()) / 2.0));
}

HermitianOperator HermitianOperator::identity(std::size_t dim) {
  return HermitianOperator(CMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
}

HermitianOperator HermitianOperator::zero(std::size_t dim) {
  return HermitianOperator(CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
}

HermitianOperator HermitianOperator::diagonal(std::span<const double> values) {
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) {
    m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = values[k];
  }
  return HermitianOperator(std::move(m));
}

HermitianOperator HermitianOperator::diagonal(std::initializer_list<double> values) {
  return diagonal(std::span<const double>(values.begin(), values.size()));
}

RVector HermitianOperator::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(entries_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double HermitianOperator::min_eigenvalue() const { return eigenvalues()(0); }

HermitianOperator HermitianOperator::operator+(const HermitianOperator& other) const {
  require_same_dim("HermitianOperator +", dim(), other.dim());
  return HermitianOperator(CMatrix(entries_ + other.entries_));
}

HermitianOperator HermitianOperator::operator-(const HermitianOperator& other) const {
  require_same_dim("HermitianOperator -", dim(), other.dim());
  return HermitianOperator(CMatrix(entries_ - other.entries_));
}

HermitianOperator HermitianOperator::operator*(double s) const { return HermitianOperator(CMatrix(entries_ * s)); }

FieldVector HermitianOperator::apply(const FieldVector& v) const {
  require_same_dim("HermitianOperator::apply", dim(), v.dim());
  return FieldVector(CVector(entries_ * v.components()));
}

// ------------------------------------------------------------ DensityOperator

DensityOperator::DensityOperator(HermitianOperator rho) : rho_(std::move(rho)) {
  const double tr = rho_.trace();
  if (std::abs(tr - 1.0) > kTraceTolerance) {
    throw DomainError("DensityOperator: trace " + std::to_string(tr) + " is not 1");
  }
  const double lo = rho_.min_eigenvalue();
  if (lo < -kPsdTolerance) {
    throw DomainError("DensityOperator: negative eigenvalue " + std::to_string(lo));
  }
}

DensityOperator DensityOperator::pure(const FieldVector& psi) { return DensityOperator(projector_from_state(psi)); }

DensityOperator DensityOperator::maximally_mixed(std::size_t dim) {
  return DensityOperator(HermitianOperator::identity(dim) * (1.0 / static_cast<double>(dim)));
}

// ----------------------------------------------------------------- operations

HermitianOperator projector_from_state(const FieldVector& psi) {
  const double n2 = psi.squared_norm();
  if (!(n2 > 0.0)) throw DomainError("projector_from_state: zero vector");
  const CVector& v = psi.components();
  CMatrix p = v * v.adjoint() / n2;
  // Exact Hermiticity; the outer product is Hermitian up to rounding only.
  return HermitianOperator::symmetrized(p);
}

double trace_product(const HermitianOperator& d, const HermitianOperator& a) {
  require_same_dim("trace_product", d.dim(), a.dim());
  // Tr(DA) = sum_ij D_ij A_ji
  const Complex tr = (d.matrix().array() * a.matrix().transpose().array()).sum();
  const double scale = 1.0 + d.matrix().norm() * a.matrix().norm();
  if (std::abs(tr.imag()) > 1e-12 * scale) {
    throw NumericalError("trace_product: imaginary residue " + std::to_string(tr.imag()));
  }
  return tr.real();
}

HermitianOperator tensor_product(const HermitianOperator& a, const HermitianOperator& b) {
  const auto na = static_cast<Eigen::Index>(a.dim());
  const auto nb = static_cast<Eigen::Index>(b.dim());
  CMatrix k(na * nb, na * nb);
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) {
      k.block(i * nb, j * nb, nb, nb) = a.matrix()(i, j) * b.matrix();
    }
  }
  return HermitianOperator(std::move(k));
}

FieldVector kron_vector(const FieldVector& a, const FieldVector& b) {
  const auto na = static_cast<Eigen::Index>(a.dim());
  const auto nb = static_cast<Eigen::Index>(b.dim());
  CVector k(na * nb);
  for (Eigen::Index i = 0; i < na; ++i) k.segment(i * nb, nb) = a.components()(i) * b.components();
  return FieldVector(std::move(k));
}

double expectation(const HermitianOperator& a, const FieldVector& psi) {
  require_same_dim("expectation", a.dim(), psi.dim());
  return psi.components().dot(a.matrix() * psi.components()).real();
}

CMatrix reshape_bipartite(const FieldVector& psi, std::size_t dim_a, std::size_t dim_b) {
  require_same_dim("reshape_bipartite", dim_a * dim_b, psi.dim());
  CMatrix m(static_cast<Eigen::Index>(dim_a), static_cast<Eigen::Index>(dim_b));
  for (std::size_t j = 0; j < dim_a; ++j) {
    for (std::size_t k = 0; k < dim_b; ++k) {
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = psi[j * dim_b + k];
    }
  }
  return m;
}

HermitianOperator reduced_first(const FieldVector& psi, std::size_t dim_a, std::size_t dim_b) {
  const CMatrix m = reshape_bipartite(psi, dim_a, dim_b);
  return HermitianOperator::symmetrized(m * m.adjoint());
}

HermitianOperator reduced_second(const FieldVector& psi, std::size_t dim_a, std::size_t dim_b) {
  const CMatrix m = reshape_bipartite(psi, dim_a, dim_b);
  return HermitianOperator::symmetrized(m.transpose() * m.conjugate());
}

FieldVector riemann_silberstein(const EMFieldPair& f) {
  require_same_dim("riemann_silberstein", static_cast<std::size_t>(f.electric.size()),
                   static_cast<std::size_t>(f.magnetic.size()));
  CVector phi(f.electric.size());
  for (Eigen::Index k = 0; k < phi.size(); ++k) phi(k) = Complex(f.electric(k), f.magnetic(k));
  return FieldVector(std::move(phi));
}

EMFieldPair split_riemann_silberstein(const FieldVector& phi) {
  return EMFieldPair{phi.components().real(), phi.components().imag()};
}

}  // namespace pcsft
