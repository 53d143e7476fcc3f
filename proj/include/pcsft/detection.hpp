#pragma once

// Threshold detection of classical field signals.
//
// A bipartite pure state Psi on C^n (x) C^n with reshaping M (entry (j, k) is
// the amplitude of |j>|k>) is represented by a pair of random fields
// (phi1, phi2) such that (phi1, conj(phi2)) is a circular Gaussian vector with
// block covariance
//
//     K = [[ M M^dagger + eps I,   M                 ],
//          [ M^dagger,             M^dagger M + eps I ]].
//
// The marginal covariances are rho1 + eps I and rho2 + eps I (rho_i the
// reduced density operators), and Wick's theorem gives
//
//     cov(f_A(phi1), f_B(phi2)) = Tr(A M B^T M^dagger) = <Psi| A (x) B |Psi>.
//
// The transpose on B is why the second field enters K conjugated. K is
// positive semi-definite only for eps >= eps* = max_k (s_k - s_k^2) over the
// Schmidt coefficients s_k of Psi; smaller backgrounds are rejected.
//
// A detector splits a field into orthogonal channels; a channel clicks when
// its power |P_c phi|^2 exceeds the threshold. One trial is one time window.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pcsft/error.hpp"
#include "pcsft/hilbert.hpp"
#include "pcsft/observables.hpp"
#include "pcsft/random_field.hpp"
#include "pcsft/rng.hpp"

namespace pcsft {

/// Raised when eps is below the positivity bound of the block covariance.
class SubThresholdEpsilon : public DomainError {
 public:
  SubThresholdEpsilon(double epsilon, double minimal_epsilon);
  double minimal_epsilon() const { return minimal_; }

 private:
  double minimal_;
};

class BipartiteEnsemble {
 public:
  BipartiteEnsemble(const FieldVector& psi, double epsilon);

  std::size_t party_dim() const { return n_; }
  double epsilon() const { return epsilon_; }
  const FieldVector& state() const { return psi_; }
  /// Covariance of the stacked circular vector (phi1, conj(phi2)).
  const HermitianOperator& block_covariance() const { return block_; }
  const CMatrix& cross_block() const { return cross_; }
  /// E[phi1 phi1^dagger] = rho1 + eps I.
  HermitianOperator marginal_first() const;
  /// E[phi2 phi2^dagger] = rho2 + eps I.
  HermitianOperator marginal_second() const;

  std::pair<FieldVector, FieldVector> draw(RandomSeed seed, std::uint64_t trial) const;

 private:
  FieldVector psi_;
  std::size_t n_;
  double epsilon_;
  CMatrix cross_;
  HermitianOperator block_;
  CMatrix factor_;
};

/// Smallest background for which the block covariance of psi is positive
/// semi-definite: max(0, -lambda_min(K at eps = 0)).
double minimal_epsilon(const FieldVector& psi);

/// Validates |psi| = 1 (1e-10) and a square product dimension; throws
/// SubThresholdEpsilon carrying eps* when eps is too small.
BipartiteEnsemble bipartite_ensemble(const FieldVector& psi, double epsilon);

struct QuadraticCorrelation {
  double mean_first = 0;        ///< E f_A(phi1) = Tr(D1 A)
  double mean_second = 0;       ///< E f_B(phi2) = Tr(D2 B)
  double raw_moment = 0;        ///< E f_A(phi1) f_B(phi2)
  double renormalized = 0;      ///< raw_moment - mean_first * mean_second; equals <Psi|A(x)B|Psi>
  double quantum_covariance = 0;  ///< renormalized minus the product of background-renormalized means
};

/// Exact moments via Wick's theorem.
QuadraticCorrelation quadratic_correlation(const BipartiteEnsemble& ensemble, const HermitianOperator& a,
                                           const HermitianOperator& b);

struct QuadraticCorrelationMc {
  McEstimate raw_moment;
  McEstimate renormalized;  ///< sample covariance of f_A(phi1), f_B(phi2)
};

QuadraticCorrelationMc quadratic_correlation_mc(const BipartiteEnsemble& ensemble, const HermitianOperator& a,
                                                const HermitianOperator& b, std::size_t n_samples, RandomSeed seed);

/// Orthogonal projectors summing to the identity.
class ChannelSet {
 public:
  explicit ChannelSet(std::vector<HermitianOperator> projectors);
  std::size_t size() const { return projectors_.size(); }
  std::size_t dim() const { return projectors_.front().dim(); }
  const HermitianOperator& operator[](std::size_t c) const { return projectors_[c]; }
  /// |P_c phi|^2 = <P_c phi, phi>.
  double channel_power(std::size_t c, const FieldVector& phi) const;

 private:
  std::vector<HermitianOperator> projectors_;
};

/// P+ = e e^T and P- = e' e'^T with e = (cos t, sin t), e' = (-sin t, cos t).
std::pair<HermitianOperator, HermitianOperator> pbs_projectors(double theta);
ChannelSet pbs_channels(double theta);

/// Spin/polarization observable P+(t) - P-(t).
HermitianOperator polarization_observable(double theta);

class ThresholdDetector {
 public:
  explicit ThresholdDetector(double threshold);
  double threshold() const { return threshold_; }

 private:
  double threshold_;
};

enum class ClickClass { kNone, kSingle, kDouble };
enum class PostSelection { kKeepSingles, kKeepAll };

std::string to_string(ClickClass c);
ClickClass click_class_from_string(const std::string& s);

ClickClass classify(const std::array<bool, 2>& clicks);

/// One time window. Channel 0 is the "+" output of the beam splitter.
struct TrialRecord {
  double theta1 = 0;
  double theta2 = 0;
  std::array<bool, 2> clicks1{};
  std::array<bool, 2> clicks2{};
  ClickClass class1 = ClickClass::kNone;
  ClickClass class2 = ClickClass::kNone;
  bool accepted = false;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

std::array<bool, 2> detect(const ChannelSet& channels, const ThresholdDetector& detector, const FieldVector& phi);

/// Trials [first_trial, first_trial + n_trials) of the two-party experiment.
std::vector<TrialRecord> run_trials(const BipartiteEnsemble& ensemble, double theta1, double theta2,
                                    const ThresholdDetector& detector, std::size_t n_trials, RandomSeed seed,
                                    PostSelection policy = PostSelection::kKeepSingles, std::uint64_t first_trial = 0);

/// Single detector on a one-party ensemble; party 2 fields stay empty and
/// acceptance depends on party 1 only.
std::vector<TrialRecord> run_single_party_trials(const GaussianFieldEnsemble& ensemble, double theta,
                                                 const ThresholdDetector& detector, std::size_t n_trials,
                                                 RandomSeed seed, PostSelection policy = PostSelection::kKeepSingles,
                                                 std::uint64_t first_trial = 0);

struct PartyCounts {
  std::array<std::size_t, 2> clicks{};   ///< raw clicks per channel
  std::array<std::size_t, 2> singles{};  ///< single-click trials per channel
  std::size_t doubles = 0;
  std::size_t nones = 0;
};

struct ClickStatistics {
  std::size_t n_trials = 0;
  std::size_t n_accepted = 0;
  PartyCounts party1;
  PartyCounts party2;
  /// Accepted single/single coincidences, [outcome1][outcome2], index 0 = "+".
  std::array<std::array<std::size_t, 2>, 2> coincidences{};
  bool degenerate = false;  ///< no channel clicked in any trial

  double click_frequency(int party, std::size_t channel) const;
  double double_click_rate(int party) const;
  double accepted_fraction() const;
  std::size_t coincidence_total() const;
};

ClickStatistics click_statistics(std::span<const TrialRecord> records);

struct ClickCorrelation {
  double value = 0;
  double standard_error = 0;
  std::size_t n_coincidences = 0;
};

/// (N++ + N-- - N+- - N-+) / N over accepted single-click coincidences.
ClickCorrelation correlation_from_clicks(std::span<const TrialRecord> records);

// ---------------------------------------------------------------- calibration

struct CalibrationScanPoint {
  double threshold = 0;
  std::array<double, 2> dark_rate{};
  double full_response = 0;   ///< excess click rate of a unit-intensity channel
  double half_response = 0;   ///< excess click rate of a half-intensity channel
  double linearity_defect = 0;  ///< |full - 2 half| / full
  double mixed_imbalance = 0;   ///< single-click rate difference between channels, maximally mixed source
};

/// Detector calibration against reference sources in a two-channel PBS basis:
/// vacuum (dark rates), a basis state (unit intensity in one channel) and the
/// maximally mixed state (half intensity in each). The threshold is the grid
/// point where the background-subtracted click response is most nearly
/// proportional to intensity.
struct ThresholdCalibration {
  double epsilon = 0;
  double threshold = 0;
  std::array<double, 2> dark_rate{};
  std::size_t n_trials = 0;
  std::vector<CalibrationScanPoint> scan;
};

ThresholdCalibration calibrate_threshold(double epsilon, std::span<const double> threshold_grid,
                                         std::size_t n_trials, RandomSeed seed);

struct BornFrequencies {
  std::array<double, 2> click_rate{};
  std::array<double, 2> excess{};  ///< click_rate - dark_rate
  std::array<double, 2> frequency{};
  std::array<double, 2> frequency_se{};
  double ratio = 0;  ///< excess[0] / excess[1]
  double ratio_se = 0;
  std::size_t n_trials = 0;
};

/// Relative channel frequencies from raw per-channel click rates of party 1,
/// after subtracting the calibrated dark rates.
BornFrequencies born_frequencies(std::span<const TrialRecord> records, const ThresholdCalibration& calibration);

// ------------------------------------------------------------------------ I/O

/// Columns theta1,theta2,click1_plus,click1_minus,click2_plus,click2_minus,
/// class1,class2,accepted.
void write_trials_csv(std::ostream& out, std::span<const TrialRecord> records);
std::vector<TrialRecord> read_trials_csv(std::istream& in);

}  // namespace pcsft
