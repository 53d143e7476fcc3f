#include "pcsft/dynamics.hpp"

#include <cmath>
#include <ostream>

#include "pcsft/error.hpp"
#include "pcsft/parallel.hpp"
#include "pcsft/serialize.hpp"

namespace pcsft {

PhasePoint PhasePoint::from_field(const FieldVector& phi) {
  return PhasePoint{phi.components().real(), phi.components().imag()};
}

FieldVector PhasePoint::to_field() const {
  CVector v(q.size());
  for (Eigen::Index k = 0; k < q.size(); ++k) v(k) = Complex(q(k), p(k));
  return FieldVector(std::move(v));
}

HamiltonianSystem::HamiltonianSystem(HermitianOperator h)
    : h_(std::move(h)), r_(h_.matrix().real()), s_(h_.matrix().imag()) {
  r_ = (r_ + r_.transpose()) / 2.0;
  s_ = (s_ - s_.transpose()) / 2.0;
}

double HamiltonianSystem::energy(const PhasePoint& x) const {
  return 0.5 * (x.q.dot(r_ * x.q) + x.p.dot(r_ * x.p)) - x.q.dot(s_ * x.p);
}

RVector HamiltonianSystem::dq(const PhasePoint& x) const { return r_ * x.p + s_ * x.q; }

RVector HamiltonianSystem::dp(const PhasePoint& x) const { return -(r_ * x.q) + s_ * x.p; }

CMatrix exact_propagator(const HermitianOperator& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h.matrix());
  const RVector& w = solver.eigenvalues();
  CVector phases(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) phases(k) = std::exp(Complex(0.0, -t * w(k)));
  return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

SymplecticIntegrator::SymplecticIntegrator(const HamiltonianSystem& system, double dt) : dt_(dt) {
  if (!(dt > 0.0)) throw DomainError("SymplecticIntegrator: dt must be positive");
  const RMatrix& r = system.real_part();
  const RMatrix& s = system.imag_part();

  Eigen::SelfAdjointEigenSolver<RMatrix> rs(r);
  const RVector& w = rs.eigenvalues();
  RVector c(w.size()), sn(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    c(k) = std::cos(w(k) * dt);
    sn(k) = std::sin(w(k) * dt);
  }
  cos_r_ = rs.eigenvectors() * c.asDiagonal() * rs.eigenvectors().transpose();
  sin_r_ = rs.eigenvectors() * sn.asDiagonal() * rs.eigenvectors().transpose();

  // exp(S t) = V exp(-i mu t) V^dagger for the Hermitian iS = V mu V^dagger.
  const CMatrix is = Complex(0.0, 1.0) * s.cast<Complex>();
  Eigen::SelfAdjointEigenSolver<CMatrix> ss(HermitianOperator::symmetrized(is).matrix());
  CVector phases(ss.eigenvalues().size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) {
    phases(k) = std::exp(Complex(0.0, -0.5 * dt * ss.eigenvalues()(k)));
  }
  half_rotation_ = (ss.eigenvectors() * phases.asDiagonal() * ss.eigenvectors().adjoint()).real();
}

PhasePoint SymplecticIntegrator::step(const PhasePoint& x) const {
  RVector q = half_rotation_ * x.q;
  RVector p = half_rotation_ * x.p;
  RVector q2 = cos_r_ * q + sin_r_ * p;
  RVector p2 = cos_r_ * p - sin_r_ * q;
  return PhasePoint{half_rotation_ * q2, half_rotation_ * p2};
}

PhasePoint SymplecticIntegrator::advance(PhasePoint x, std::size_t n_steps) const {
  for (std::size_t k = 0; k < n_steps; ++k) x = step(x);
  return x;
}

PhasePoint symplectic_step(const HamiltonianSystem& system, const PhasePoint& x, double dt) {
  return SymplecticIntegrator(system, dt).step(x);
}

namespace {

std::size_t step_count(double t, double dt) {
  if (!(dt > 0.0)) throw DomainError("integrate: dt must be positive");
  if (!(t >= 0.0)) throw DomainError("integrate: t must be non-negative");
  return static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
}

}  // namespace

PhasePoint integrate(const HamiltonianSystem& system, const PhasePoint& x, double t, double dt) {
  const std::size_t n = step_count(t, dt);
  if (n == 0) return x;
  return SymplecticIntegrator(system, t / static_cast<double>(n)).advance(x, n);
}

GaussianFieldEnsemble evolve_ensemble(const GaussianFieldEnsemble& ensemble, const HermitianOperator& h, double t) {
  if (h.dim() != ensemble.dim()) throw DimensionMismatch("evolve_ensemble", ensemble.dim(), h.dim());
  const CMatrix u = exact_propagator(h, t);
  const CMatrix d = u * ensemble.covariance().matrix() * u.adjoint();
  return GaussianFieldEnsemble(HermitianOperator::symmetrized(d), ensemble.background_epsilon());
}

std::vector<FieldVector> propagate_samples(std::span<const FieldVector> samples, const HermitianOperator& h, double t,
                                           double dt) {
  std::vector<FieldVector> out(samples.size());
  if (samples.empty()) return out;
  const HamiltonianSystem system(h);
  const std::size_t n = step_count(t, dt);
  if (n == 0) return {samples.begin(), samples.end()};
  const SymplecticIntegrator stepper(system, t / static_cast<double>(n));
  for_each_block(
      samples.size(),
      [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          if (samples[i].dim() != h.dim()) throw DimensionMismatch("propagate_samples", h.dim(), samples[i].dim());
          out[i] = stepper.advance(PhasePoint::from_field(samples[i]), n).to_field();
        }
      },
      64);
  return out;
}

std::vector<TrajectoryRow> trajectory(const HamiltonianSystem& system, const PhasePoint& x0, double t, double dt,
                                      std::size_t stride) {
  const std::size_t n = step_count(t, dt);
  const double h = n == 0 ? dt : t / static_cast<double>(n);
  const SymplecticIntegrator stepper(system, h);
  if (stride == 0) stride = 1;
  std::vector<TrajectoryRow> rows;
  PhasePoint x = x0;
  auto record = [&](std::size_t k) {
    const FieldVector phi = x.to_field();
    rows.push_back(TrajectoryRow{static_cast<double>(k) * h, phi, system.energy(x), phi.squared_norm()});
  };
  record(0);
  for (std::size_t k = 1; k <= n; ++k) {
    x = stepper.step(x);
    if (k % stride == 0 || k == n) record(k);
  }
  return rows;
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRow> rows) {
  if (rows.empty()) return;
  const std::size_t n = rows.front().phi.dim();
  out << "t";
  for (std::size_t k = 0; k < n; ++k) out << ",re" << k << ",im" << k;
  out << ",H,norm2\r\n";
  for (const auto& r : rows) {
    out << format_double(r.t);
    for (std::size_t k = 0; k < n; ++k) out << "," << format_double(r.phi[k].real()) << "," << format_double(r.phi[k].imag());
    out << "," << format_double(r.energy) << "," << format_double(r.squared_norm) << "\r\n";
  }
}

}  // namespace pcsft
