#pragma once

// Finite-dimensional complex Hilbert space substrate: field vectors, Hermitian
// operators, density operators and the Riemann-Silberstein packaging of a real
// (E, B) pair.
//
// Inner product convention: <u, v> = sum_k u_k conj(v_k), conjugate-linear in
// the second slot. With it the projector onto Psi acts as
// D u = <u, Psi> Psi, i.e. D = Psi Psi^dagger.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pcsft {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kTraceTolerance = 1e-12;

/// A complex coordinate vector: a prequantum field sample or a quantum state.
/// Samples are not normalized; only quantum states carry unit norm.
class FieldVector {
 public:
  FieldVector() = default;
  explicit FieldVector(CVector components);
  FieldVector(std::initializer_list<Complex> components);

  static FieldVector zero(std::size_t dim);
  static FieldVector basis(std::size_t dim, std::size_t k);

  std::size_t dim() const { return static_cast<std::size_t>(components_.size()); }
  const CVector& components() const { return components_; }
  Complex operator[](std::size_t k) const { return components_(static_cast<Eigen::Index>(k)); }

  double squared_norm() const { return components_.squaredNorm(); }
  double norm() const { return components_.norm(); }
  FieldVector normalized() const;

  friend FieldVector operator+(const FieldVector& a, const FieldVector& b);
  friend FieldVector operator-(const FieldVector& a, const FieldVector& b);
  friend FieldVector operator*(Complex s, const FieldVector& v);

 private:
  CVector components_;
};

/// <u, v> = sum_k u_k conj(v_k).
Complex inner(const FieldVector& u, const FieldVector& v);

/// Self-adjoint matrix. Hermiticity is checked at construction against
/// kHermitianTolerance; use symmetrized() to project an almost-Hermitian
/// matrix explicitly.
class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(CMatrix entries);

  static HermitianOperator symmetrized(const CMatrix& m);
  static HermitianOperator identity(std::size_t dim);
  static HermitianOperator zero(std::size_t dim);
  static HermitianOperator diagonal(std::span<const double> values);
  static HermitianOperator diagonal(std::initializer_list<double> values);

  std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
  const CMatrix& matrix() const { return entries_; }
  Complex operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  double trace() const { return entries_.trace().real(); }
  /// Ascending real eigenvalues.
  RVector eigenvalues() const;
  double min_eigenvalue() const;

  HermitianOperator operator+(const HermitianOperator& other) const;
  HermitianOperator operator-(const HermitianOperator& other) const;
  HermitianOperator operator*(double s) const;

  FieldVector apply(const FieldVector& v) const;

 private:
  CMatrix entries_;
};

/// Positive semi-definite, unit-trace Hermitian operator.
class DensityOperator {
 public:
  explicit DensityOperator(HermitianOperator rho);

  static DensityOperator pure(const FieldVector& psi);
  static DensityOperator maximally_mixed(std::size_t dim);

  std::size_t dim() const { return rho_.dim(); }
  const HermitianOperator& op() const { return rho_; }

 private:
  HermitianOperator rho_;
};

/// Real electric and magnetic amplitudes of equal dimension.
struct EMFieldPair {
  RVector electric;
  RVector magnetic;
};

/// Normalized outer product Psi Psi^dagger / |Psi|^2. Throws DomainError for
/// the zero vector.
HermitianOperator projector_from_state(const FieldVector& psi);

/// Re Tr(D A). Throws NumericalError if |Im Tr(D A)| exceeds 1e-12 (scaled by
/// the operator magnitudes).
double trace_product(const HermitianOperator& d, const HermitianOperator& a);

HermitianOperator tensor_product(const HermitianOperator& a, const HermitianOperator& b);
FieldVector kron_vector(const FieldVector& a, const FieldVector& b);

/// <A psi, psi> for a Hermitian A; the quantum average in a pure state.
double expectation(const HermitianOperator& a, const FieldVector& psi);

/// Row-major reshaping of a dim_a*dim_b state into a dim_a x dim_b matrix:
/// entry (j, k) is the amplitude of |j> (x) |k>.
CMatrix reshape_bipartite(const FieldVector& psi, std::size_t dim_a, std::size_t dim_b);

/// Partial traces of |psi><psi| over a dim_a x dim_b product space.
HermitianOperator reduced_first(const FieldVector& psi, std::size_t dim_a, std::size_t dim_b);
HermitianOperator reduced_second(const FieldVector& psi, std::size_t dim_a, std::size_t dim_b);

/// phi = E + iB. Throws DimensionMismatch when E and B differ in length.
FieldVector riemann_silberstein(const EMFieldPair& f);
EMFieldPair split_riemann_silberstein(const FieldVector& phi);

/// max |M - M^dagger| entrywise.
double hermiticity_defect(const CMatrix& m);

}  // namespace pcsft
