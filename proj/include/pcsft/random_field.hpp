#pragma once

// Zero-mean circular complex Gaussian field ensembles. A quantum state enters
// only through the covariance operator of its ensemble; the background field
// adds epsilon * I on top.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pcsft/hilbert.hpp"
#include "pcsft/rng.hpp"
#include "pcsft/serialize.hpp"

namespace pcsft {

/// White-noise background with covariance epsilon * I.
class BackgroundField {
 public:
  BackgroundField() = default;
  explicit BackgroundField(double epsilon);
  double epsilon() const { return epsilon_; }

 private:
  double epsilon_ = 0.0;
};

/// Factor S with S S^dagger = K from the eigendecomposition K = V diag(w) V^dagger,
/// S = V diag(sqrt(w)). Eigenvalues in [-kPsdTolerance, 0) are clipped to zero,
/// anything more negative is a DomainError.
CMatrix psd_sampler_factor(const CMatrix& covariance, const char* where);

/// One draw of S xi with xi standard circular complex Gaussian
/// (independent real and imaginary parts of variance 1/2).
CVector draw_circular(const CMatrix& factor, CounterRng& rng);

class GaussianFieldEnsemble {
 public:
  /// `background_epsilon` records how much of the covariance is vacuum noise;
  /// it is carried along for renormalization and serialization only.
  explicit GaussianFieldEnsemble(HermitianOperator covariance, double background_epsilon = 0.0);

  std::size_t dim() const { return covariance_.dim(); }
  const HermitianOperator& covariance() const { return covariance_; }
  const CMatrix& sampler_factor() const { return factor_; }
  double background_epsilon() const { return epsilon_; }

  /// Sample for trial index `trial`: stream (seed, trial).
  FieldVector draw(RandomSeed seed, std::uint64_t trial) const;

 private:
  HermitianOperator covariance_;
  CMatrix factor_;
  double epsilon_ = 0.0;
};

/// Covariance Psi Psi^dagger / |Psi|^2 + epsilon I.
GaussianFieldEnsemble ensemble_from_pure_state(const FieldVector& psi, BackgroundField background);
/// Covariance rho + epsilon I.
GaussianFieldEnsemble ensemble_from_density(const DensityOperator& rho, BackgroundField background);

/// Samples for trials [first_trial, first_trial + n_samples).
std::vector<FieldVector> sample(const GaussianFieldEnsemble& ensemble, std::size_t n_samples, RandomSeed seed,
                                std::uint64_t first_trial = 0);

/// A white-in-time signal: element t is the trial-t sample.
std::vector<FieldVector> time_series(const GaussianFieldEnsemble& ensemble, std::size_t length, RandomSeed seed);

/// (1/N) sum phi phi^dagger. The mean is taken to be zero, not estimated.
HermitianOperator empirical_covariance(std::span<const FieldVector> samples);
/// (1/N) sum phi phi^T; vanishes in expectation for circular fields.
CMatrix empirical_pseudo_covariance(std::span<const FieldVector> samples);

/// |phi|^2.
double power(const FieldVector& phi);
/// E|phi|^2 = Tr D.
double dispersion(const GaussianFieldEnsemble& ensemble);

/// Time average of the power over a white-in-time signal of the given length,
/// computed without storing the signal.
double time_averaged_power(const GaussianFieldEnsemble& ensemble, std::size_t length, RandomSeed seed);

/// One row per sample, columns re0,im0,re1,im1,...
void write_samples_csv(std::ostream& out, std::span<const FieldVector> samples);
std::vector<FieldVector> read_samples_csv(std::istream& in);

Json to_json(const GaussianFieldEnsemble& ensemble);
GaussianFieldEnsemble ensemble_from_json(const Json& j);

}  // namespace pcsft
