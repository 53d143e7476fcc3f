#pragma once

// Classical observables on the field: quadratic forms f_A(phi) = <A phi, phi>,
// general smooth functionals with f(0) = 0, exact and Monte Carlo averages,
// background renormalization and Hessian extraction at phi = 0.

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "pcsft/hilbert.hpp"
#include "pcsft/random_field.hpp"
#include "pcsft/serialize.hpp"

namespace pcsft {

class QuadraticForm {
 public:
  explicit QuadraticForm(HermitianOperator op) : op_(std::move(op)) {}
  const HermitianOperator& op() const { return op_; }
  std::size_t dim() const { return op_.dim(); }

 private:
  HermitianOperator op_;
};

/// <A phi, phi>. Throws NumericalError if the imaginary residue exceeds 1e-12
/// relative to |A| |phi|^2.
double evaluate_quadratic(const QuadraticForm& f, const FieldVector& phi);

/// A real functional of the field in the real coordinates phi = q + ip.
/// Gradients, when supplied, are returned as the 2n vector (dF/dq, dF/dp).
class FieldFunctional {
 public:
  using Evaluator = std::function<double(const FieldVector&)>;
  using Gradient = std::function<RVector(const FieldVector&)>;

  /// Rejects evaluators with f(0) != 0 (DomainError).
  FieldFunctional(std::size_t dim, Evaluator f, std::optional<Gradient> gradient = std::nullopt,
                  std::string name = "functional");

  std::size_t dim() const { return dim_; }
  const std::string& name() const { return name_; }
  double operator()(const FieldVector& phi) const { return f_(phi); }
  bool has_gradient() const { return gradient_.has_value(); }
  RVector gradient(const FieldVector& phi) const;

 private:
  std::size_t dim_;
  Evaluator f_;
  std::optional<Gradient> gradient_;
  std::string name_;
};

FieldFunctional zero_functional(std::size_t dim);
FieldFunctional quadratic_functional(const HermitianOperator& a);
/// |phi|^2.
FieldFunctional power_functional(std::size_t dim);
/// |phi|^4.
FieldFunctional quartic_power_functional(std::size_t dim);
FieldFunctional sum(const FieldFunctional& f, const FieldFunctional& g);

/// Central-difference gradient in (q, p), used to audit analytic gradients.
RVector finite_difference_gradient(const FieldFunctional& f, const FieldVector& phi, double step = 1e-6);

struct McEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

Json to_json(const McEstimate& e);

/// Tr(D A): the ensemble average of f_A for a zero-mean Gaussian field.
double classical_average_exact(const GaussianFieldEnsemble& ensemble, const QuadraticForm& f);

/// Monte Carlo mean and standard error of f over trials [0, n_samples).
McEstimate classical_average_mc(const GaussianFieldEnsemble& ensemble, const FieldFunctional& f,
                                std::size_t n_samples, RandomSeed seed);

/// average - epsilon * Tr A: strips the background contribution.
double renormalize(double average, const HermitianOperator& a, double epsilon);

/// E<phi, y>; identically zero for every zero-mean ensemble.
Complex linear_functional_average(const GaussianFieldEnsemble& ensemble, const FieldVector& y);

struct ComplexMcEstimate {
  Complex mean;
  double standard_error = 0.0;
  std::size_t n_samples = 0;
};

ComplexMcEstimate linear_functional_average_mc(const GaussianFieldEnsemble& ensemble, const FieldVector& y,
                                               std::size_t n_samples, RandomSeed seed);

struct HessianExtraction {
  /// A such that the quadratic part of f is <A phi, phi> (that is f''(0)/2).
  HermitianOperator op;
  /// Real 2n x 2n Hessian in (q, p) coordinates.
  RMatrix real_hessian;
  /// Largest entry of the part of f''(0)/2 that couples to phi phi^T
  /// rather than phi phi^dagger.
  double phase_defect = 0.0;
  bool representable = true;
};

/// Richardson-refined central-difference Hessian of f at 0, reassembled into a
/// complex operator. Throws NumericalError on non-finite evaluations.
HessianExtraction hessian_extract(const FieldFunctional& f, double step = 1e-3);

struct QuadraticApproximationReport {
  McEstimate classical;       ///< Monte Carlo average of f
  double quadratic_term = 0;  ///< Tr(D A) with A = f''(0)/2
  double gap = 0;             ///< classical.mean - quadratic_term
  double phase_defect = 0;
};

Json to_json(const QuadraticApproximationReport& r);

QuadraticApproximationReport quadratic_approximation_error(const FieldFunctional& f,
                                                           const GaussianFieldEnsemble& ensemble,
                                                           std::size_t n_samples, RandomSeed seed,
                                                           double step = 1e-3);

}  // namespace pcsft
