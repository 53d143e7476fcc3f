#pragma once

// Schroedinger dynamics of prequantum fields, in both complex form
// (phi' = -i H phi, hbar = 1) and Hamiltonian form on the real phase space
// phi = q + ip with H(q, p) = 1/2 <H phi, phi>.
//
// Writing H = R + iS with R real symmetric and S real antisymmetric,
//   H(q, p) = 1/2 (q^T R q + p^T R p) - q^T S p,
//   q' = dH/dp = R p + S q,   p' = -dH/dq = -R q + S p,
// which is exactly phi' = -i H phi. The integrator splits H(q, p) into the
// R part (a rotation of each R-eigenmode in its (q, p) plane) and the S part
// (the same real rotation exp(tS) applied to q and p); both flows are solved
// exactly and composed in the symmetric Stoermer-Verlet pattern
// S(dt/2) R(dt) S(dt/2).

#include <iosfwd>
#include <span>
#include <vector>

#include "pcsft/hilbert.hpp"
#include "pcsft/random_field.hpp"

namespace pcsft {

struct PhasePoint {
  RVector q;
  RVector p;

  static PhasePoint from_field(const FieldVector& phi);
  FieldVector to_field() const;
};

class HamiltonianSystem {
 public:
  explicit HamiltonianSystem(HermitianOperator h);

  std::size_t dim() const { return h_.dim(); }
  const HermitianOperator& op() const { return h_; }
  const RMatrix& real_part() const { return r_; }
  const RMatrix& imag_part() const { return s_; }

  /// H(q, p) = 1/2 <H phi, phi>.
  double energy(const PhasePoint& x) const;
  RVector dq(const PhasePoint& x) const;  ///< dH/dp
  RVector dp(const PhasePoint& x) const;  ///< -dH/dq

 private:
  HermitianOperator h_;
  RMatrix r_;
  RMatrix s_;
};

/// U(t) = exp(-i t H) by eigendecomposition.
CMatrix exact_propagator(const HermitianOperator& h, double t);

/// Precomputed one-step map for a fixed dt.
class SymplecticIntegrator {
 public:
  SymplecticIntegrator(const HamiltonianSystem& system, double dt);

  double dt() const { return dt_; }
  PhasePoint step(const PhasePoint& x) const;
  PhasePoint advance(PhasePoint x, std::size_t n_steps) const;

 private:
  double dt_;
  RMatrix half_rotation_;  ///< exp(S dt/2)
  RMatrix cos_r_;          ///< cos(R dt)
  RMatrix sin_r_;          ///< sin(R dt)
};

PhasePoint symplectic_step(const HamiltonianSystem& system, const PhasePoint& x, double dt);

/// Integrates to time t with n = ceil(t / dt) equal steps of size t / n.
PhasePoint integrate(const HamiltonianSystem& system, const PhasePoint& x, double t, double dt);

/// Covariance U(t) D U(t)^dagger; the background epsilon is carried over.
GaussianFieldEnsemble evolve_ensemble(const GaussianFieldEnsemble& ensemble, const HermitianOperator& h, double t);

/// Pushes every sample through the symplectic flow.
std::vector<FieldVector> propagate_samples(std::span<const FieldVector> samples, const HermitianOperator& h, double t,
                                           double dt);

struct TrajectoryRow {
  double t = 0;
  FieldVector phi;
  double energy = 0;
  double squared_norm = 0;
};

/// Samples the trajectory every `stride` steps (and at the final time).
std::vector<TrajectoryRow> trajectory(const HamiltonianSystem& system, const PhasePoint& x0, double t, double dt,
                                      std::size_t stride);

/// Columns t, re0, im0, ..., H, norm2.
void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRow> rows);

}  // namespace pcsft
