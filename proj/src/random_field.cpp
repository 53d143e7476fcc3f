#include "pcsft/random_field.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "pcsft/error.hpp"
#include "pcsft/parallel.hpp"

namespace pcsft {

BackgroundField::BackgroundField(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("epsilon must be non-negative");
  }
}

CMatrix psd_sampler_factor(const CMatrix& covariance, const char* where) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(covariance);
  if (solver.info() != Eigen::Success) throw NumericalError(std::string(where) + ": eigendecomposition failed");
  RVector w = solver.eigenvalues();
  if (w(0) < -kPsdTolerance) {
    throw DomainError(std::string(where) + ": covariance is not positive semi-definite (min eigenvalue " +
                      std::to_string(w(0)) + ")");
  }
  // Round-off eigenvalues of a rank-deficient covariance would otherwise leak
  // sqrt(1e-17) ~ 3e-9 amplitudes into directions with zero variance.
  const double floor = 1e-13 * std::max(1.0, w.maxCoeff());
  for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = w(k) <= floor ? 0.0 : std::sqrt(w(k));
  return solver.eigenvectors() * w.asDiagonal();
}

CVector draw_circular(const CMatrix& factor, CounterRng& rng) {
  const Eigen::Index n = factor.cols();
  CVector xi(n);
  constexpr double kHalfVar = 0.70710678118654752440;  // sqrt(1/2)
  for (Eigen::Index k = 0; k < n; ++k) {
    const double re = rng.normal();
    const double im = rng.normal();
    xi(k) = Complex(re * kHalfVar, im * kHalfVar);
  }
  return factor * xi;
}

GaussianFieldEnsemble::GaussianFieldEnsemble(HermitianOperator covariance, double background_epsilon)
    : covariance_(std::move(covariance)),
      factor_(psd_sampler_factor(covariance_.matrix(), "GaussianFieldEnsemble")),
      epsilon_(background_epsilon) {}

FieldVector GaussianFieldEnsemble::draw(RandomSeed seed, std::uint64_t trial) const {
  CounterRng rng(seed, trial);
  return FieldVector(draw_circular(factor_, rng));
}

GaussianFieldEnsemble ensemble_from_pure_state(const FieldVector& psi, BackgroundField background) {
  const HermitianOperator p = projector_from_state(psi);
  return GaussianFieldEnsemble(p + HermitianOperator::identity(p.dim()) * background.epsilon(),
                               background.epsilon());
}

GaussianFieldEnsemble ensemble_from_density(const DensityOperator& rho, BackgroundField background) {
  return GaussianFieldEnsemble(rho.op() + HermitianOperator::identity(rho.dim()) * background.epsilon(),
                               background.epsilon());
}

std::vector<FieldVector> sample(const GaussianFieldEnsemble& ensemble, std::size_t n_samples, RandomSeed seed,
                                std::uint64_t first_trial) {
  if (n_samples == 0) throw DomainError("sample: n_samples must be at least 1");
  std::vector<FieldVector> out(n_samples);
  for_each_block(n_samples, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = ensemble.draw(seed, first_trial + i);
  });
  return out;
}

std::vector<FieldVector> time_series(const GaussianFieldEnsemble& ensemble, std::size_t length, RandomSeed seed) {
  if (length == 0) throw DomainError("time_series: length must be at least 1");
  return sample(ensemble, length, seed);
}

namespace {

void require_samples(std::span<const FieldVector> samples, const char* where) {
  if (samples.size() < 2) throw DomainError(std::string(where) + ": at least two samples required");
  for (const auto& s : samples) {
    if (s.dim() != samples.front().dim()) throw DimensionMismatch(where, samples.front().dim(), s.dim());
  }
}

}  // namespace

HermitianOperator empirical_covariance(std::span<const FieldVector> samples) {
  require_samples(samples, "empirical_covariance");
  const auto n = static_cast<Eigen::Index>(samples.front().dim());
  CMatrix acc = CMatrix::Zero(n, n);
  for (const auto& s : samples) acc.noalias() += s.components() * s.components().adjoint();
  acc /= static_cast<double>(samples.size());
  return HermitianOperator::symmetrized(acc);
}

CMatrix empirical_pseudo_covariance(std::span<const FieldVector> samples) {
  require_samples(samples, "empirical_pseudo_covariance");
  const auto n = static_cast<Eigen::Index>(samples.front().dim());
  CMatrix acc = CMatrix::Zero(n, n);
  for (const auto& s : samples) acc.noalias() += s.components() * s.components().transpose();
  return acc / static_cast<double>(samples.size());
}

double power(const FieldVector& phi) { return phi.squared_norm(); }

double dispersion(const GaussianFieldEnsemble& ensemble) { return ensemble.covariance().trace(); }

double time_averaged_power(const GaussianFieldEnsemble& ensemble, std::size_t length, RandomSeed seed) {
  if (length == 0) throw DomainError("time_averaged_power: length must be at least 1");
  std::vector<double> partial(block_count(length), 0.0);
  for_each_block(length, [&](std::size_t b, std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t t = begin; t < end; ++t) s += power(ensemble.draw(seed, t));
    partial[b] = s;
  });
  double total = 0.0;
  for (double s : partial) total += s;
  return total / static_cast<double>(length);
}

void write_samples_csv(std::ostream& out, std::span<const FieldVector> samples) {
  if (samples.empty()) return;
  const std::size_t n = samples.front().dim();
  for (std::size_t k = 0; k < n; ++k) out << (k ? "," : "") << "re" << k << ",im" << k;
  out << "\r\n";
  for (const auto& s : samples) {
    for (std::size_t k = 0; k < n; ++k) {
      out << (k ? "," : "") << format_double(s[k].real()) << "," << format_double(s[k].imag());
    }
    out << "\r\n";
  }
}

std::vector<FieldVector> read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("read_samples_csv: missing header");
  std::vector<FieldVector> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    if (values.size() % 2 != 0 || values.empty()) throw DomainError("read_samples_csv: odd column count");
    CVector v(static_cast<Eigen::Index>(values.size() / 2));
    for (std::size_t k = 0; k < values.size() / 2; ++k) {
      v(static_cast<Eigen::Index>(k)) = Complex(values[2 * k], values[2 * k + 1]);
    }
    out.emplace_back(std::move(v));
  }
  return out;
}

Json to_json(const GaussianFieldEnsemble& ensemble) {
  Json j;
  j["covariance"] = to_json(ensemble.covariance());
  j["epsilon"] = ensemble.background_epsilon();
  return j;
}

GaussianFieldEnsemble ensemble_from_json(const Json& j) {
  return GaussianFieldEnsemble(HermitianOperator(matrix_from_json(j.at("covariance"))),
                               j.at("epsilon").get<double>());
}

}  // namespace pcsft
