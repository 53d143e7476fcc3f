#include "pcsft/random_matrices.hpp"

#include <cmath>

namespace pcsft {

namespace {

CMatrix ginibre(std::size_t dim, CounterRng& rng) {
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = rng.normal();
      g(i, j) = Complex(re, rng.normal());
    }
  }
  return g;
}

}  // namespace

FieldVector random_state(std::size_t dim, CounterRng& rng) {
  CVector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double re = rng.normal();
    v(k) = Complex(re, rng.normal());
  }
  return FieldVector(std::move(v)).normalized();
}

HermitianOperator random_hermitian(std::size_t dim, CounterRng& rng) {
  const CMatrix g = ginibre(dim, rng);
  CMatrix h = (g + g.adjoint()) / 2.0;
  const double radius = HermitianOperator::symmetrized(h).eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 0.0) h /= radius;
  return HermitianOperator::symmetrized(h);
}

CMatrix random_unitary(std::size_t dim, CounterRng& rng) {
  const CMatrix g = ginibre(dim, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    const Complex d = r(k, k);
    if (std::abs(d) > 0.0) q.col(k) *= d / std::abs(d);
  }
  return q;
}

DensityOperator random_density(std::size_t dim, CounterRng& rng) {
  const CMatrix g = ginibre(dim, rng);
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityOperator(HermitianOperator::symmetrized(rho));
}

}  // namespace pcsft
