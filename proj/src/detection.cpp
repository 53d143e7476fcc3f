#include "pcsft/detection.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "pcsft/error.hpp"
#include "pcsft/parallel.hpp"
#include "pcsft/serialize.hpp"

namespace pcsft {

namespace {

std::size_t party_dimension(const FieldVector& psi) {
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(psi.dim()))));
  if (n * n != psi.dim()) {
    throw DomainError("bipartite_ensemble: state dimension " + std::to_string(psi.dim()) + " is not a square");
  }
  return n;
}

CMatrix unshifted_block(const CMatrix& m) {
  const Eigen::Index n = m.rows();
  CMatrix k(2 * n, 2 * n);
  k.topLeftCorner(n, n) = m * m.adjoint();
  k.topRightCorner(n, n) = m;
  k.bottomLeftCorner(n, n) = m.adjoint();
  k.bottomRightCorner(n, n) = m.adjoint() * m;
  return (k + k.adjoint()) / 2.0;
}

}  // namespace

SubThresholdEpsilon::SubThresholdEpsilon(double epsilon, double minimal_epsilon)
    : DomainError("bipartite_ensemble: epsilon " + std::to_string(epsilon) +
                  " is below the positivity bound eps* = " + std::to_string(minimal_epsilon)),
      minimal_(minimal_epsilon) {}

double minimal_epsilon(const FieldVector& psi) {
  const std::size_t n = party_dimension(psi);
  const CMatrix k = unshifted_block(reshape_bipartite(psi, n, n));
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(k, Eigen::EigenvaluesOnly);
  return std::max(0.0, -solver.eigenvalues()(0));
}

BipartiteEnsemble::BipartiteEnsemble(const FieldVector& psi, double epsilon)
    : psi_(psi), n_(party_dimension(psi)), epsilon_(epsilon) {
  if (std::abs(psi.norm() - 1.0) > 1e-10) throw DomainError("bipartite_ensemble: state must have unit norm");
  if (!(epsilon >= 0.0)) throw DomainError("epsilon must be non-negative");
  const double eps_star = minimal_epsilon(psi);
  if (epsilon < eps_star - kPsdTolerance) throw SubThresholdEpsilon(epsilon, eps_star);

  cross_ = reshape_bipartite(psi, n_, n_);
  const auto dim2 = static_cast<Eigen::Index>(2 * n_);
  CMatrix k = unshifted_block(cross_) + epsilon * CMatrix::Identity(dim2, dim2);
  block_ = HermitianOperator(std::move(k));
  factor_ = psd_sampler_factor(block_.matrix(), "bipartite_ensemble");
}

HermitianOperator BipartiteEnsemble::marginal_first() const {
  const auto n = static_cast<Eigen::Index>(n_);
  return HermitianOperator::symmetrized(block_.matrix().topLeftCorner(n, n));
}

HermitianOperator BipartiteEnsemble::marginal_second() const {
  const auto n = static_cast<Eigen::Index>(n_);
  return HermitianOperator::symmetrized(block_.matrix().bottomRightCorner(n, n).conjugate());
}

std::pair<FieldVector, FieldVector> BipartiteEnsemble::draw(RandomSeed seed, std::uint64_t trial) const {
  CounterRng rng(seed, trial);
  const CVector x = draw_circular(factor_, rng);
  const auto n = static_cast<Eigen::Index>(n_);
  return {FieldVector(CVector(x.head(n))), FieldVector(CVector(x.tail(n).conjugate()))};
}

BipartiteEnsemble bipartite_ensemble(const FieldVector& psi, double epsilon) { return BipartiteEnsemble(psi, epsilon); }

// ---------------------------------------------------------------- correlations

QuadraticCorrelation quadratic_correlation(const BipartiteEnsemble& ensemble, const HermitianOperator& a,
                                           const HermitianOperator& b) {
  const std::size_t n = ensemble.party_dim();
  if (a.dim() != n) throw DimensionMismatch("quadratic_correlation (A)", n, a.dim());
  if (b.dim() != n) throw DimensionMismatch("quadratic_correlation (B)", n, b.dim());
  const CMatrix& m = ensemble.cross_block();

  QuadraticCorrelation c;
  c.mean_first = trace_product(ensemble.marginal_first(), a);
  c.mean_second = trace_product(ensemble.marginal_second(), b);
  const Complex cross = (a.matrix() * m * b.matrix().transpose() * m.adjoint()).trace();
  c.renormalized = cross.real();
  c.raw_moment = c.mean_first * c.mean_second + c.renormalized;
  const double eps = ensemble.epsilon();
  c.quantum_covariance =
      c.renormalized - renormalize(c.mean_first, a, eps) * renormalize(c.mean_second, b, eps);
  return c;
}

namespace {

struct Accumulator {
  double n = 0, mean = 0, m2 = 0;
  void add(double x) {
    n += 1;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void merge(const Accumulator& o) {
    if (o.n == 0) return;
    const double t = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / t;
    m2 += o.m2 + d * d * n * o.n / t;
    n = t;
  }
  double se() const { return n > 1 ? std::sqrt(m2 / (n - 1) / n) : 0.0; }
};

}  // namespace

QuadraticCorrelationMc quadratic_correlation_mc(const BipartiteEnsemble& ensemble, const HermitianOperator& a,
                                                const HermitianOperator& b, std::size_t n_samples,
                                                RandomSeed seed) {
  if (n_samples < 2) throw DomainError("quadratic_correlation_mc: n_samples must be at least 2");
  const QuadraticForm fa(a), fb(b);
  const std::size_t blocks = block_count(n_samples);

  // Pass 1: means of f_A, f_B and of the product.
  std::vector<std::array<Accumulator, 3>> first(blocks);
  for_each_block(n_samples, [&](std::size_t blk, std::size_t begin, std::size_t end) {
    std::array<Accumulator, 3> acc{};
    for (std::size_t i = begin; i < end; ++i) {
      const auto [p1, p2] = ensemble.draw(seed, i);
      const double va = evaluate_quadratic(fa, p1);
      const double vb = evaluate_quadratic(fb, p2);
      acc[0].add(va);
      acc[1].add(vb);
      acc[2].add(va * vb);
    }
    first[blk] = acc;
  });
  std::array<Accumulator, 3> tot{};
  for (const auto& acc : first) {
    for (int k = 0; k < 3; ++k) tot[k].merge(acc[k]);
  }

  // Pass 2: centred products, regenerated from the same counter streams.
  std::vector<Accumulator> second(blocks);
  const double ma = tot[0].mean, mb = tot[1].mean;
  for_each_block(n_samples, [&](std::size_t blk, std::size_t begin, std::size_t end) {
    Accumulator acc;
    for (std::size_t i = begin; i < end; ++i) {
      const auto [p1, p2] = ensemble.draw(seed, i);
      acc.add((evaluate_quadratic(fa, p1) - ma) * (evaluate_quadratic(fb, p2) - mb));
    }
    second[blk] = acc;
  });
  Accumulator centred;
  for (const auto& acc : second) centred.merge(acc);

  QuadraticCorrelationMc out;
  out.raw_moment = McEstimate{tot[2].mean, tot[2].se(), n_samples, seed.master};
  out.renormalized = McEstimate{centred.mean, centred.se(), n_samples, seed.master};
  return out;
}

// -------------------------------------------------------------------- channels

ChannelSet::ChannelSet(std::vector<HermitianOperator> projectors) : projectors_(std::move(projectors)) {
  if (projectors_.empty()) throw DomainError("ChannelSet: no channels");
  const std::size_t n = projectors_.front().dim();
  CMatrix total = CMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < projectors_.size(); ++c) {
    if (projectors_[c].dim() != n) throw DimensionMismatch("ChannelSet", n, projectors_[c].dim());
    total += projectors_[c].matrix();
    for (std::size_t c2 = c + 1; c2 < projectors_.size(); ++c2) {
      if ((projectors_[c].matrix() * projectors_[c2].matrix()).cwiseAbs().maxCoeff() > 1e-12) {
        throw DomainError("ChannelSet: channel projectors are not orthogonal");
      }
    }
  }
  const CMatrix id = CMatrix::Identity(total.rows(), total.cols());
  if ((total - id).cwiseAbs().maxCoeff() > 1e-12) throw DomainError("ChannelSet: projectors do not sum to I");
}

double ChannelSet::channel_power(std::size_t c, const FieldVector& phi) const {
  return phi.components().dot(projectors_[c].matrix() * phi.components()).real();
}

std::pair<HermitianOperator, HermitianOperator> pbs_projectors(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  CMatrix plus(2, 2), minus(2, 2);
  plus << c * c, c * s, c * s, s * s;
  minus << s * s, -c * s, -c * s, c * c;
  return {HermitianOperator(std::move(plus)), HermitianOperator(std::move(minus))};
}

ChannelSet pbs_channels(double theta) {
  auto [plus, minus] = pbs_projectors(theta);
  return ChannelSet({std::move(plus), std::move(minus)});
}

HermitianOperator polarization_observable(double theta) {
  const auto [plus, minus] = pbs_projectors(theta);
  return plus - minus;
}

ThresholdDetector::ThresholdDetector(double threshold) : threshold_(threshold) {
  if (!(threshold >= 0.0)) throw DomainError("threshold must be non-negative");
}

std::string to_string(ClickClass c) {
  switch (c) {
    case ClickClass::kNone:
      return "none";
    case ClickClass::kSingle:
      return "single";
    case ClickClass::kDouble:
      return "double";
  }
  return "none";
}

ClickClass click_class_from_string(const std::string& s) {
  if (s == "none") return ClickClass::kNone;
  if (s == "single") return ClickClass::kSingle;
  if (s == "double") return ClickClass::kDouble;
  throw DomainError("unknown click classification '" + s + "'");
}

ClickClass classify(const std::array<bool, 2>& clicks) {
  const int n = static_cast<int>(clicks[0]) + static_cast<int>(clicks[1]);
  return n == 0 ? ClickClass::kNone : n == 1 ? ClickClass::kSingle : ClickClass::kDouble;
}

std::array<bool, 2> detect(const ChannelSet& channels, const ThresholdDetector& detector, const FieldVector& phi) {
  if (channels.size() != 2) throw DomainError("detect: two-channel detectors only");
  return {channels.channel_power(0, phi) > detector.threshold(), channels.channel_power(1, phi) > detector.threshold()};
}

std::vector<TrialRecord> run_trials(const BipartiteEnsemble& ensemble, double theta1, double theta2,
                                    const ThresholdDetector& detector, std::size_t n_trials, RandomSeed seed,
                                    PostSelection policy, std::uint64_t first_trial) {
  if (n_trials == 0) throw DomainError("run_trials: n_trials must be at least 1");
  if (ensemble.party_dim() != 2) throw DomainError("run_trials: polarization channels need party dimension 2");
  const ChannelSet ch1 = pbs_channels(theta1);
  const ChannelSet ch2 = pbs_channels(theta2);
  std::vector<TrialRecord> out(n_trials);
  for_each_block(n_trials, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto [phi1, phi2] = ensemble.draw(seed, first_trial + i);
      TrialRecord& r = out[i];
      r.theta1 = theta1;
      r.theta2 = theta2;
      r.clicks1 = detect(ch1, detector, phi1);
      r.clicks2 = detect(ch2, detector, phi2);
      r.class1 = classify(r.clicks1);
      r.class2 = classify(r.clicks2);
      r.accepted = policy == PostSelection::kKeepAll ||
                   (r.class1 == ClickClass::kSingle && r.class2 == ClickClass::kSingle);
    }
  });
  return out;
}

std::vector<TrialRecord> run_single_party_trials(const GaussianFieldEnsemble& ensemble, double theta,
                                                 const ThresholdDetector& detector, std::size_t n_trials,
                                                 RandomSeed seed, PostSelection policy, std::uint64_t first_trial) {
  if (n_trials == 0) throw DomainError("run_single_party_trials: n_trials must be at least 1");
  const ChannelSet ch = pbs_channels(theta);
  if (ensemble.dim() != 2) throw DimensionMismatch("run_single_party_trials", 2, ensemble.dim());
  std::vector<TrialRecord> out(n_trials);
  for_each_block(n_trials, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      TrialRecord& r = out[i];
      r.theta1 = theta;
      r.clicks1 = detect(ch, detector, ensemble.draw(seed, first_trial + i));
      r.class1 = classify(r.clicks1);
      r.accepted = policy == PostSelection::kKeepAll || r.class1 == ClickClass::kSingle;
    }
  });
  return out;
}

// ------------------------------------------------------------------ statistics

namespace {

void tally(PartyCounts& c, const std::array<bool, 2>& clicks, ClickClass cls) {
  for (std::size_t k = 0; k < 2; ++k) c.clicks[k] += clicks[k] ? 1 : 0;
  if (cls == ClickClass::kSingle) ++c.singles[clicks[0] ? 0 : 1];
  if (cls == ClickClass::kDouble) ++c.doubles;
  if (cls == ClickClass::kNone) ++c.nones;
}

}  // namespace

double ClickStatistics::click_frequency(int party, std::size_t channel) const {
  const PartyCounts& c = party == 1 ? party1 : party2;
  return n_trials ? static_cast<double>(c.clicks[channel]) / static_cast<double>(n_trials) : 0.0;
}

double ClickStatistics::double_click_rate(int party) const {
  const PartyCounts& c = party == 1 ? party1 : party2;
  return n_trials ? static_cast<double>(c.doubles) / static_cast<double>(n_trials) : 0.0;
}

double ClickStatistics::accepted_fraction() const {
  return n_trials ? static_cast<double>(n_accepted) / static_cast<double>(n_trials) : 0.0;
}

std::size_t ClickStatistics::coincidence_total() const {
  return coincidences[0][0] + coincidences[0][1] + coincidences[1][0] + coincidences[1][1];
}

ClickStatistics click_statistics(std::span<const TrialRecord> records) {
  if (records.empty()) throw DomainError("click_statistics: no records");
  ClickStatistics s;
  s.n_trials = records.size();
  for (const auto& r : records) {
    tally(s.party1, r.clicks1, r.class1);
    tally(s.party2, r.clicks2, r.class2);
    if (!r.accepted) continue;
    ++s.n_accepted;
    if (r.class1 == ClickClass::kSingle && r.class2 == ClickClass::kSingle) {
      ++s.coincidences[r.clicks1[0] ? 0 : 1][r.clicks2[0] ? 0 : 1];
    }
  }
  s.degenerate = s.party1.nones == s.n_trials && s.party2.nones == s.n_trials;
  return s;
}

ClickCorrelation correlation_from_clicks(std::span<const TrialRecord> records) {
  std::array<std::array<std::size_t, 2>, 2> n{};
  for (const auto& r : records) {
    if (r.accepted && r.class1 == ClickClass::kSingle && r.class2 == ClickClass::kSingle) {
      ++n[r.clicks1[0] ? 0 : 1][r.clicks2[0] ? 0 : 1];
    }
  }
  const std::size_t total = n[0][0] + n[0][1] + n[1][0] + n[1][1];
  if (total == 0) throw DomainError("correlation_from_clicks: no accepted coincidences");
  const double e = (static_cast<double>(n[0][0] + n[1][1]) - static_cast<double>(n[0][1] + n[1][0])) /
                   static_cast<double>(total);
  return ClickCorrelation{e, std::sqrt(std::max(0.0, 1.0 - e * e) / static_cast<double>(total)), total};
}

// ------------------------------------------------------------------ calibration

ThresholdCalibration calibrate_threshold(double epsilon, std::span<const double> threshold_grid,
                                         std::size_t n_trials, RandomSeed seed) {
  if (threshold_grid.empty()) throw DomainError("calibrate_threshold: empty threshold grid");
  if (n_trials == 0) throw DomainError("calibrate_threshold: n_trials must be at least 1");
  for (double d : threshold_grid) ThresholdDetector{d};
  const BackgroundField background(epsilon);

  // Reference sources; each gets its own block of trial indices.
  const GaussianFieldEnsemble vacuum(HermitianOperator::identity(2) * epsilon, epsilon);
  const GaussianFieldEnsemble basis = ensemble_from_pure_state(FieldVector::basis(2, 0), background);
  const GaussianFieldEnsemble mixed = ensemble_from_density(DensityOperator::maximally_mixed(2), background);
  const std::array<const GaussianFieldEnsemble*, 3> sources{&vacuum, &basis, &mixed};
  const ChannelSet channels = pbs_channels(0.0);

  const std::size_t g = threshold_grid.size();
  // counts[block][source][grid][k]: k = 0, 1 raw clicks per channel; 2, 3 single clicks per channel.
  using Counts = std::vector<std::array<std::array<std::size_t, 4>, 3>>;
  std::vector<Counts> per_block(block_count(n_trials), Counts(g));
  for_each_block(n_trials, [&](std::size_t b, std::size_t begin, std::size_t end) {
    Counts& c = per_block[b];
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t src = 0; src < 3; ++src) {
        const FieldVector phi = sources[src]->draw(seed, src * n_trials + i);
        const double p0 = channels.channel_power(0, phi);
        const double p1 = channels.channel_power(1, phi);
        for (std::size_t k = 0; k < g; ++k) {
          const bool c0 = p0 > threshold_grid[k];
          const bool c1 = p1 > threshold_grid[k];
          auto& slot = c[k][src];
          slot[0] += c0;
          slot[1] += c1;
          slot[2] += c0 && !c1;
          slot[3] += c1 && !c0;
        }
      }
    }
  });
  Counts total(g);
  for (const auto& c : per_block) {
    for (std::size_t k = 0; k < g; ++k) {
      for (std::size_t src = 0; src < 3; ++src) {
        for (std::size_t j = 0; j < 4; ++j) total[k][src][j] += c[k][src][j];
      }
    }
  }

  ThresholdCalibration cal;
  cal.epsilon = epsilon;
  cal.n_trials = n_trials;
  const double n = static_cast<double>(n_trials);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g; ++k) {
    CalibrationScanPoint pt;
    pt.threshold = threshold_grid[k];
    pt.dark_rate = {static_cast<double>(total[k][0][0]) / n, static_cast<double>(total[k][0][1]) / n};
    pt.full_response = static_cast<double>(total[k][1][0]) / n - pt.dark_rate[0];
    pt.half_response = 0.5 * (static_cast<double>(total[k][2][0]) / n - pt.dark_rate[0] +
                              static_cast<double>(total[k][2][1]) / n - pt.dark_rate[1]);
    pt.linearity_defect = pt.full_response > 0.0
                              ? std::abs(pt.full_response - 2.0 * pt.half_response) / pt.full_response
                              : std::numeric_limits<double>::infinity();
    pt.mixed_imbalance =
        (static_cast<double>(total[k][2][2]) - static_cast<double>(total[k][2][3])) / n;
    if (pt.linearity_defect < best) {
      best = pt.linearity_defect;
      cal.threshold = pt.threshold;
      cal.dark_rate = pt.dark_rate;
    }
    cal.scan.push_back(pt);
  }
  if (!std::isfinite(best)) throw NumericalError("calibrate_threshold: no threshold produced a click response");
  return cal;
}

BornFrequencies born_frequencies(std::span<const TrialRecord> records, const ThresholdCalibration& calibration) {
  if (records.empty()) throw DomainError("born_frequencies: no records");
  BornFrequencies out;
  out.n_trials = records.size();
  const double n = static_cast<double>(records.size());
  const double nc = static_cast<double>(calibration.n_trials);
  std::array<double, 2> var{};
  for (std::size_t c = 0; c < 2; ++c) {
    std::size_t k = 0;
    for (const auto& r : records) k += r.clicks1[c] ? 1 : 0;
    const double p = static_cast<double>(k) / n;
    const double d = calibration.dark_rate[c];
    out.click_rate[c] = p;
    out.excess[c] = p - d;
    var[c] = p * (1.0 - p) / n + d * (1.0 - d) / nc;
  }
  const double total = out.excess[0] + out.excess[1];
  if (!(total > 0.0)) throw NumericalError("born_frequencies: no click excess over the dark rate");
  for (std::size_t c = 0; c < 2; ++c) {
    out.frequency[c] = out.excess[c] / total;
    const double other = out.excess[1 - c];
    out.frequency_se[c] =
        std::sqrt(other * other * var[c] + out.excess[c] * out.excess[c] * var[1 - c]) / (total * total);
  }
  out.ratio = out.excess[0] / out.excess[1];
  out.ratio_se = std::abs(out.ratio) * std::sqrt(var[0] / (out.excess[0] * out.excess[0]) +
                                                 var[1] / (out.excess[1] * out.excess[1]));
  return out;
}

// ------------------------------------------------------------------------ I/O

void write_trials_csv(std::ostream& out, std::span<const TrialRecord> records) {
  out << "theta1,theta2,click1_plus,click1_minus,click2_plus,click2_minus,class1,class2,accepted\r\n";
  for (const auto& r : records) {
    out << format_double(r.theta1) << ',' << format_double(r.theta2) << ',' << r.clicks1[0] << ',' << r.clicks1[1]
        << ',' << r.clicks2[0] << ',' << r.clicks2[1] << ',' << to_string(r.class1) << ',' << to_string(r.class2)
        << ',' << r.accepted << "\r\n";
  }
}

namespace {

bool parse_flag(const std::string& s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw DomainError("read_trials_csv: bad boolean '" + s + "'");
}

}  // namespace

std::vector<TrialRecord> read_trials_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("read_trials_csv: missing header");
  std::vector<TrialRecord> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) throw DomainError("read_trials_csv: expected 9 columns, got " + std::to_string(cells.size()));
    TrialRecord r;
    r.theta1 = std::stod(cells[0]);
    r.theta2 = std::stod(cells[1]);
    r.clicks1 = {parse_flag(cells[2]), parse_flag(cells[3])};
    r.clicks2 = {parse_flag(cells[4]), parse_flag(cells[5])};
    r.class1 = click_class_from_string(cells[6]);
    r.class2 = click_class_from_string(cells[7]);
    r.accepted = parse_flag(cells[8]);
    if (r.class1 != classify(r.clicks1) || r.class2 != classify(r.clicks2)) {
      throw DomainError("read_trials_csv: classification inconsistent with click flags");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace pcsft
