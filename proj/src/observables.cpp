#include "pcsft/observables.hpp"

#include <cmath>
#include <vector>

#include "pcsft/error.hpp"
#include "pcsft/parallel.hpp"

namespace pcsft {

namespace {

RVector real_coordinates(const FieldVector& phi) {
  const auto n = static_cast<Eigen::Index>(phi.dim());
  RVector x(2 * n);
  x.head(n) = phi.components().real();
  x.tail(n) = phi.components().imag();
  return x;
}

FieldVector from_real_coordinates(const RVector& x) {
  const Eigen::Index n = x.size() / 2;
  CVector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = Complex(x(k), x(n + k));
  return FieldVector(std::move(v));
}

/// Welford accumulator; merged across blocks with Chan's update in block order.
struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    const double total = n + o.n;
    const double delta = o.mean - mean;
    mean += delta * o.n / total;
    m2 += o.m2 + delta * delta * n * o.n / total;
    n = total;
  }

  double standard_error() const { return n > 1.0 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0; }
};

}  // namespace

double evaluate_quadratic(const QuadraticForm& f, const FieldVector& phi) {
  if (f.dim() != phi.dim()) throw DimensionMismatch("evaluate_quadratic", f.dim(), phi.dim());
  const Complex value = phi.components().dot(f.op().matrix() * phi.components());
  const double scale = 1.0 + f.op().matrix().norm() * phi.squared_norm();
  if (std::abs(value.imag()) > 1e-12 * scale) {
    throw NumericalError("evaluate_quadratic: imaginary residue " + std::to_string(value.imag()));
  }
  return value.real();
}

// ------------------------------------------------------------ FieldFunctional

FieldFunctional::FieldFunctional(std::size_t dim, Evaluator f, std::optional<Gradient> gradient, std::string name)
    : dim_(dim), f_(std::move(f)), gradient_(std::move(gradient)), name_(std::move(name)) {
  if (dim_ == 0) throw DomainError("FieldFunctional: dimension must be at least 1");
  const double at_zero = f_(FieldVector::zero(dim_));
  if (at_zero != 0.0) {
    throw DomainError("FieldFunctional '" + name_ + "': f(0) = " + std::to_string(at_zero) + ", must be exactly 0");
  }
}

RVector FieldFunctional::gradient(const FieldVector& phi) const {
  if (!gradient_) throw DomainError("FieldFunctional '" + name_ + "' has no analytic gradient");
  return (*gradient_)(phi);
}

FieldFunctional zero_functional(std::size_t dim) {
  return FieldFunctional(
      dim, [](const FieldVector&) { return 0.0; },
      [dim](const FieldVector&) { return RVector(RVector::Zero(2 * static_cast<Eigen::Index>(dim))); }, "zero");
}

FieldFunctional quadratic_functional(const HermitianOperator& a) {
  QuadraticForm form(a);
  // d<A phi, phi> = 2 Re<A phi, d phi>: gradient (Re 2A phi, Im 2A phi).
  auto gradient = [a](const FieldVector& phi) {
    const CVector g = 2.0 * (a.matrix() * phi.components());
    const Eigen::Index n = g.size();
    RVector out(2 * n);
    out.head(n) = g.real();
    out.tail(n) = g.imag();
    return out;
  };
  return FieldFunctional(
      a.dim(), [form](const FieldVector& phi) { return evaluate_quadratic(form, phi); }, gradient, "quadratic");
}

FieldFunctional power_functional(std::size_t dim) {
  return FieldFunctional(
      dim, [](const FieldVector& phi) { return phi.squared_norm(); },
      [](const FieldVector& phi) { return RVector(2.0 * real_coordinates(phi)); }, "power");
}

FieldFunctional quartic_power_functional(std::size_t dim) {
  return FieldFunctional(
      dim,
      [](const FieldVector& phi) {
        const double p = phi.squared_norm();
        return p * p;
      },
      [](const FieldVector& phi) { return RVector(4.0 * phi.squared_norm() * real_coordinates(phi)); },
      "quartic_power");
}

FieldFunctional sum(const FieldFunctional& f, const FieldFunctional& g) {
  if (f.dim() != g.dim()) throw DimensionMismatch("FieldFunctional sum", f.dim(), g.dim());
  std::optional<FieldFunctional::Gradient> gradient;
  if (f.has_gradient() && g.has_gradient()) {
    gradient = [f, g](const FieldVector& phi) { return RVector(f.gradient(phi) + g.gradient(phi)); };
  }
  return FieldFunctional(
      f.dim(), [f, g](const FieldVector& phi) { return f(phi) + g(phi); }, gradient, f.name() + "+" + g.name());
}

RVector finite_difference_gradient(const FieldFunctional& f, const FieldVector& phi, double step) {
  const RVector x = real_coordinates(phi);
  RVector g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    RVector plus = x;
    RVector minus = x;
    plus(k) += step;
    minus(k) -= step;
    g(k) = (f(from_real_coordinates(plus)) - f(from_real_coordinates(minus))) / (2.0 * step);
  }
  return g;
}

// ------------------------------------------------------------------ averages

Json to_json(const McEstimate& e) {
  Json j;
  j["estimate"] = e.mean;
  j["standard_error"] = e.standard_error;
  j["provenance"] = "mc";
  j["n_samples"] = e.n_samples;
  j["seed"] = e.seed;
  return j;
}

double classical_average_exact(const GaussianFieldEnsemble& ensemble, const QuadraticForm& f) {
  return trace_product(ensemble.covariance(), f.op());
}

McEstimate classical_average_mc(const GaussianFieldEnsemble& ensemble, const FieldFunctional& f,
                                std::size_t n_samples, RandomSeed seed) {
  if (n_samples < 2) throw DomainError("classical_average_mc: n_samples must be at least 2");
  if (f.dim() != ensemble.dim()) throw DimensionMismatch("classical_average_mc", ensemble.dim(), f.dim());
  std::vector<Moments> blocks(block_count(n_samples));
  for_each_block(n_samples, [&](std::size_t b, std::size_t begin, std::size_t end) {
    Moments m;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = f(ensemble.draw(seed, i));
      if (!std::isfinite(v)) throw NumericalError("classical_average_mc: non-finite functional value");
      m.add(v);
    }
    blocks[b] = m;
  });
  Moments total;
  for (const auto& m : blocks) total.merge(m);
  return McEstimate{total.mean, total.standard_error(), n_samples, seed.master};
}

double renormalize(double average, const HermitianOperator& a, double epsilon) {
  return average - epsilon * a.trace();
}

Complex linear_functional_average(const GaussianFieldEnsemble& ensemble, const FieldVector& y) {
  if (y.dim() != ensemble.dim()) throw DimensionMismatch("linear_functional_average", ensemble.dim(), y.dim());
  return Complex(0.0, 0.0);
}

ComplexMcEstimate linear_functional_average_mc(const GaussianFieldEnsemble& ensemble, const FieldVector& y,
                                               std::size_t n_samples, RandomSeed seed) {
  if (n_samples < 2) throw DomainError("linear_functional_average_mc: n_samples must be at least 2");
  if (y.dim() != ensemble.dim()) throw DimensionMismatch("linear_functional_average_mc", ensemble.dim(), y.dim());
  std::vector<Moments> re(block_count(n_samples));
  std::vector<Moments> im(re.size());
  for_each_block(n_samples, [&](std::size_t b, std::size_t begin, std::size_t end) {
    Moments mr, mi;
    for (std::size_t i = begin; i < end; ++i) {
      const Complex v = inner(ensemble.draw(seed, i), y);
      mr.add(v.real());
      mi.add(v.imag());
    }
    re[b] = mr;
    im[b] = mi;
  });
  Moments tr, ti;
  for (std::size_t b = 0; b < re.size(); ++b) {
    tr.merge(re[b]);
    ti.merge(im[b]);
  }
  return ComplexMcEstimate{Complex(tr.mean, ti.mean), std::hypot(tr.standard_error(), ti.standard_error()),
                           n_samples};
}

// ------------------------------------------------------------------- Hessian

namespace {

RMatrix central_hessian(const FieldFunctional& f, std::size_t dim, double h) {
  const auto m = static_cast<Eigen::Index>(2 * dim);
  auto eval = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
    RVector x = RVector::Zero(m);
    x(i) += si * h;
    x(j) += sj * h;
    const double v = f(from_real_coordinates(x));
    if (!std::isfinite(v)) throw NumericalError("hessian_extract: non-finite evaluation of " + f.name());
    return v;
  };
  const double f0 = f(FieldVector::zero(dim));
  RMatrix hess(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    hess(i, i) = (eval(i, 1, i, 0) - 2.0 * f0 + eval(i, -1, i, 0)) / (h * h);
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double v = (eval(i, 1, j, 1) - eval(i, 1, j, -1) - eval(i, -1, j, 1) + eval(i, -1, j, -1)) / (4.0 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

}  // namespace

HessianExtraction hessian_extract(const FieldFunctional& f, double step) {
  if (!(step > 0.0)) throw DomainError("hessian_extract: step must be positive");
  const std::size_t dim = f.dim();
  const auto n = static_cast<Eigen::Index>(dim);
  const RMatrix coarse = central_hessian(f, dim, step);
  const RMatrix fine = central_hessian(f, dim, step / 2.0);
  const RMatrix hess = (4.0 * fine - coarse) / 3.0;

  // f''(0)/2 = [[R, -S], [S, R]] for f = <(R + iS) phi, phi>, phi = q + ip.
  const RMatrix half = hess / 2.0;
  const RMatrix qq = half.topLeftCorner(n, n);
  const RMatrix pp = half.bottomRightCorner(n, n);
  const RMatrix qp = half.topRightCorner(n, n);
  const RMatrix pq = half.bottomLeftCorner(n, n);
  const RMatrix real_part = (qq + pp) / 2.0;
  const RMatrix imag_part = (pq - qp) / 2.0;

  // Phase-breaking block [[P, Q], [Q, -P]] for f = Re((P + iQ) phi phi^T).
  const double defect = std::max((qq - pp).cwiseAbs().maxCoeff(), (qp + pq).cwiseAbs().maxCoeff()) / 2.0;
  const double tolerance = 1e-6 * (1.0 + half.cwiseAbs().maxCoeff());

  CMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = Complex(real_part(i, j), imag_part(i, j));
  }
  return HessianExtraction{HermitianOperator::symmetrized(a), hess, defect, defect <= tolerance};
}

Json to_json(const QuadraticApproximationReport& r) {
  Json j;
  j["classical_average"] = to_json(r.classical);
  j["quadratic_term"] = {{"value", r.quadratic_term}, {"provenance", "exact"}};
  j["gap"] = r.gap;
  j["abs_gap"] = std::abs(r.gap);
  j["phase_defect"] = r.phase_defect;
  return j;
}

QuadraticApproximationReport quadratic_approximation_error(const FieldFunctional& f,
                                                           const GaussianFieldEnsemble& ensemble,
                                                           std::size_t n_samples, RandomSeed seed, double step) {
  const HessianExtraction h = hessian_extract(f, step);
  if (!h.representable) {
    throw DomainError("quadratic_approximation_error: quadratic part of '" + f.name() +
                      "' is not phase invariant (defect " + std::to_string(h.phase_defect) + ")");
  }
  QuadraticApproximationReport r;
  r.classical = classical_average_mc(ensemble, f, n_samples, seed);
  r.quadratic_term = classical_average_exact(ensemble, QuadraticForm(h.op));
  r.gap = r.classical.mean - r.quadratic_term;
  r.phase_defect = h.phase_defect;
  return r;
}

}  // namespace pcsft
