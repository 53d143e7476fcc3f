#include "pcsft/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pcsft/analysis.hpp"
#include "pcsft/dynamics.hpp"
#include "pcsft/error.hpp"
#include "pcsft/observables.hpp"
#include "pcsft/parallel.hpp"
#include "pcsft/random_matrices.hpp"

namespace pcsft::cli {

namespace {

constexpr double kPi = std::numbers::pi;
// Streams at and above this index are reserved for drawing random states and
// operators, so they never collide with trial streams.
constexpr std::uint64_t kSetupStream = std::uint64_t{1} << 63;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_real(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  double v = 0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_count(const std::string& text) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (!s.empty() && ec == std::errc() && ptr == s.data() + s.size()) return v;
  // Allow "1e6" style counts.
  const auto d = parse_real(s);
  if (d && *d >= 0 && *d <= 9.0e15 && std::floor(*d) == *d) return static_cast<std::uint64_t>(*d);
  return std::nullopt;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

// ------------------------------------------------------------ resolved config

struct Resolved {
  ExperimentKind kind;
  std::uint64_t seed;
  std::size_t dim;
  double epsilon;
  double threshold;
  std::vector<double> angles;
  std::size_t trials;
  double time;
  double dt;
  double horizon;
  std::string source;
  std::string table;
  double flat_sum;
  PostSelection policy;
};

// Click-level defaults for the singlet: eps = 0.25 and d = 1.6 keep the
// coincidence correlation within 0.033 of -cos 2(theta1 - theta2) on a
// 9-point grid over [0, pi/2].
constexpr double kClickEpsilon = 0.25;
constexpr double kClickThreshold = 1.6;

std::vector<double> default_angles(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kTriangle:
      return {kPi / 3, kPi / 3, kPi / 3};
    case ExperimentKind::kChsh:
    case ExperimentKind::kKolmogorov:
      return {0.0, kPi / 4, kPi / 8, -kPi / 8};
    case ExperimentKind::kEpr: {
      std::vector<double> a;
      for (int k = 0; k < 16; ++k) {
        a.push_back(k * kPi / 16);
        a.push_back((k % 4) * kPi / 6);
      }
      return a;
    }
    default:
      return {};
  }
}

Resolved resolve(const ExperimentConfig& c) {
  if (!c.kind) throw DomainError("kind is required");
  if (!c.seed) throw DomainError("seed is required");
  const ExperimentKind k = *c.kind;
  Resolved r;
  r.kind = k;
  r.seed = *c.seed;
  const bool bipartite = k == ExperimentKind::kEpr || k == ExperimentKind::kChsh || k == ExperimentKind::kKolmogorov;
  r.dim = c.dim.value_or(k == ExperimentKind::kDynamics ? 4 : k == ExperimentKind::kHessian ? 3 : 2);
  r.epsilon = c.epsilon.value_or(bipartite ? kClickEpsilon : 0.1);
  r.threshold = c.threshold.value_or(kClickThreshold);
  r.angles = c.angles.value_or(default_angles(k));
  std::size_t default_trials = 100000;
  if (k == ExperimentKind::kChsh || k == ExperimentKind::kKolmogorov) default_trials = 250000;
  r.trials = c.trials.value_or(default_trials);
  r.time = c.time.value_or(1.0);
  r.dt = c.dt.value_or(1e-3);
  r.horizon = c.horizon.value_or(10.0);
  r.source = c.source.value_or(k == ExperimentKind::kKolmogorov ? "lhv" : "field");
  r.table = c.table.value_or("");
  r.flat_sum = c.flat_sum.value_or(kPi);
  r.policy = c.policy.value_or(PostSelection::kKeepSingles);
  return r;
}

// ------------------------------------------------------------------ reporting

Json exact(double v) { return Json{{"value", v}, {"provenance", "exact"}}; }
Json oracle(double v) { return Json{{"value", v}, {"provenance", "reference-oracle"}}; }
Json mc(double v, double se, std::size_t n) {
  return Json{{"value", v}, {"provenance", "mc"}, {"n", n}, {"standard_error", se}};
}

struct Report {
  Json values = Json::object();
  Json checks = Json::array();
  Json targets = Json::array();
  Json data = Json::object();
  std::vector<CsvArtifact> plots;
  bool passed = true;

  void check(const std::string& name, bool ok, std::vector<std::string> compared, const std::string& tolerance) {
    checks.push_back(Json{{"name", name}, {"passed", ok}, {"compares", compared}, {"tolerance", tolerance}});
    passed = passed && ok;
  }
};

std::string csv_row(std::initializer_list<double> xs) {
  std::string s;
  bool first = true;
  for (double x : xs) {
    if (!first) s += ',';
    s += format_double(x);
    first = false;
  }
  return s + "\r\n";
}

RandomSeed derived_seed(std::uint64_t master, std::uint64_t k) {
  return RandomSeed{master + 0x9E3779B97F4A7C15ULL * (k + 1)};
}

FieldVector singlet() {
  const double s = 1.0 / std::sqrt(2.0);
  return FieldVector{Complex(0), Complex(s), Complex(-s), Complex(0)};
}

// ---------------------------------------------------------------- experiments

void run_born(const Resolved& r, Report& rep) {
  CounterRng rng(RandomSeed{r.seed}, kSetupStream);
  const FieldVector psi = random_state(r.dim, rng);
  const HermitianOperator a = random_hermitian(r.dim, rng);
  const auto ens = ensemble_from_pure_state(psi, BackgroundField(r.epsilon));

  const double classical = classical_average_exact(ens, QuadraticForm(a));
  const double renormalized = renormalize(classical, a, r.epsilon);
  const double quantum = expectation(a, psi);
  rep.values["classical_average"] = exact(classical);
  rep.values["renormalized_average"] = exact(renormalized);
  rep.values["quantum_expectation"] = oracle(quantum);
  rep.check("renormalized_equals_quantum", std::abs(renormalized - quantum) <= 1e-10,
            {"renormalized_average", "quantum_expectation"}, "1e-10 absolute");

  const FieldFunctional f = quadratic_functional(a);
  const McEstimate est = classical_average_mc(ens, f, r.trials, RandomSeed{r.seed});
  rep.values["mc_average"] = mc(est.mean, est.standard_error, est.n_samples);
  rep.check("mc_average_within_5se", std::abs(est.mean - classical) <= 5.0 * est.standard_error,
            {"mc_average", "classical_average"}, "5 standard errors");

  std::string csv = "n,mc_mean,standard_error,exact\r\n";
  std::vector<std::size_t> checkpoints;
  for (std::size_t n = r.trials; n >= 2 && checkpoints.size() < 6; n /= 4) checkpoints.push_back(n);
  std::reverse(checkpoints.begin(), checkpoints.end());
  for (std::size_t n : checkpoints) {
    const McEstimate e = n == r.trials ? est : classical_average_mc(ens, f, n, RandomSeed{r.seed});
    csv += csv_row({static_cast<double>(n), e.mean, e.standard_error, classical});
  }
  rep.plots.push_back({"born_convergence.csv", csv});
}

void run_dynamics(const Resolved& r, Report& rep) {
  CounterRng rng(RandomSeed{r.seed}, kSetupStream);
  const HermitianOperator h = random_hermitian(r.dim, rng);
  const FieldVector psi = random_state(r.dim, rng);
  const HamiltonianSystem system(h);
  const PhasePoint x0 = PhasePoint::from_field(psi);

  const FieldVector numeric = integrate(system, x0, r.time, r.dt).to_field();
  const CVector reference = exact_propagator(h, r.time) * psi.components();
  const double state_error = (numeric.components() - reference).norm();
  rep.values["state_error"] = exact(state_error);
  rep.check("state_error", state_error <= 1e-4, {"state_error"}, "1e-4");

  const auto steps = static_cast<std::size_t>(std::ceil(r.horizon / r.dt - 1e-9));
  double energy_drift = 0, norm_drift = 0;
  if (steps > 0) {
    const SymplecticIntegrator stepper(system, r.horizon / static_cast<double>(steps));
    const double e0 = system.energy(x0);
    const double n0 = psi.squared_norm();
    PhasePoint x = x0;
    for (std::size_t k = 0; k < steps; ++k) {
      x = stepper.step(x);
      energy_drift = std::max(energy_drift, std::abs(system.energy(x) - e0));
      norm_drift = std::max(norm_drift, std::abs(x.q.squaredNorm() + x.p.squaredNorm() - n0));
    }
  }
  rep.values["energy_drift"] = exact(energy_drift);
  rep.values["norm_drift"] = exact(norm_drift);
  rep.check("energy_drift", energy_drift <= 1e-6, {"energy_drift"}, "1e-6 over [0, horizon]");
  rep.check("norm_drift", norm_drift <= 1e-6, {"norm_drift"}, "1e-6 over [0, horizon]");

  // Covariance push-forward: central difference of U D U^dagger at t = 0.
  const auto ens = ensemble_from_pure_state(psi, BackgroundField(r.epsilon));
  const double hfd = 1e-4;
  const CMatrix dplus = evolve_ensemble(ens, h, hfd).covariance().matrix();
  const CMatrix dminus = evolve_ensemble(ens, h, -hfd).covariance().matrix();
  const CMatrix& d = ens.covariance().matrix();
  const CMatrix commutator = Complex(0, -1) * (h.matrix() * d - d * h.matrix());
  const double flow_error = ((dplus - dminus) / (2 * hfd) - commutator).cwiseAbs().maxCoeff();
  rep.values["covariance_flow_error"] = exact(flow_error);
  rep.check("covariance_flow", flow_error <= 1e-6, {"covariance_flow_error"}, "1e-6");

  const GaussianFieldEnsemble vacuum(HermitianOperator::identity(r.dim) * r.epsilon, r.epsilon);
  const CMatrix moved = evolve_ensemble(vacuum, h, r.time).covariance().matrix();
  const double vacuum_error = (moved - vacuum.covariance().matrix()).cwiseAbs().maxCoeff();
  rep.values["vacuum_invariance_error"] = exact(vacuum_error);
  rep.check("vacuum_invariance", vacuum_error <= 1e-12, {"vacuum_invariance_error"}, "1e-12");

  const std::size_t stride = std::max<std::size_t>(1, steps / 1000);
  const auto rows = trajectory(system, x0, r.horizon, r.dt, stride);
  std::ostringstream csv;
  write_trajectory_csv(csv, rows);
  rep.plots.push_back({"trajectory.csv", csv.str()});
}

void run_hessian(const Resolved& r, Report& rep) {
  CounterRng rng(RandomSeed{r.seed}, kSetupStream);
  const HermitianOperator a = random_hermitian(r.dim, rng);
  const auto hx = hessian_extract(sum(quadratic_functional(a), quartic_power_functional(r.dim)));
  const double err = (hx.op.matrix() - a.matrix()).cwiseAbs().maxCoeff();
  rep.values["recovery_error"] = exact(err);
  rep.values["phase_defect"] = exact(hx.phase_defect);
  rep.check("recovered_operator", err <= 1e-5, {"recovery_error"}, "1e-5 entrywise");

  const auto hq = hessian_extract(quartic_power_functional(r.dim));
  const double quartic = hq.op.matrix().cwiseAbs().maxCoeff();
  rep.values["quartic_only_max_entry"] = exact(quartic);
  rep.check("quartic_only_zero", quartic <= 1e-6, {"quartic_only_max_entry"}, "1e-6 entrywise");

  std::string csv = "i,j,re_true,im_true,re_recovered,im_recovered\r\n";
  for (std::size_t i = 0; i < r.dim; ++i) {
    for (std::size_t j = 0; j < r.dim; ++j) {
      csv += csv_row({static_cast<double>(i), static_cast<double>(j), a(i, j).real(), a(i, j).imag(),
                      hx.op(i, j).real(), hx.op(i, j).imag()});
    }
  }
  rep.plots.push_back({"hessian_entries.csv", csv});
}

void run_epr(const Resolved& r, Report& rep) {
  const FieldVector psi = singlet();
  const BipartiteEnsemble ens = bipartite_ensemble(psi, r.epsilon);
  rep.values["minimal_epsilon"] = exact(minimal_epsilon(psi));

  double exact_vs_reference = 0, exact_vs_tensor = 0;
  std::size_t mc_failures = 0;
  std::string csv = "theta1,theta2,exact,tensor_oracle,reference,mc,standard_error\r\n";
  Json points = Json::array();
  for (std::size_t k = 0; k + 1 < r.angles.size(); k += 2) {
    const double t1 = r.angles[k], t2 = r.angles[k + 1];
    const HermitianOperator a = polarization_observable(t1);
    const HermitianOperator b = polarization_observable(t2);
    const double ex = quadratic_correlation(ens, a, b).renormalized;
    const double tensor = expectation(tensor_product(a, b), psi);
    const double ref = -std::cos(2 * (t1 - t2));
    const auto est = quadratic_correlation_mc(ens, a, b, r.trials, derived_seed(r.seed, k / 2));
    exact_vs_reference = std::max(exact_vs_reference, std::abs(ex - ref));
    exact_vs_tensor = std::max(exact_vs_tensor, std::abs(ex - tensor));
    const bool ok = std::abs(est.renormalized.mean - ex) <= 5 * est.renormalized.standard_error;
    mc_failures += ok ? 0 : 1;
    points.push_back(Json{{"theta1", exact(t1)},
                          {"theta2", exact(t2)},
                          {"renormalized", exact(ex)},
                          {"tensor_oracle", oracle(tensor)},
                          {"reference", oracle(ref)},
                          {"mc", mc(est.renormalized.mean, est.renormalized.standard_error, r.trials)}});
    csv += csv_row({t1, t2, ex, tensor, ref, est.renormalized.mean, est.renormalized.standard_error});
  }
  rep.values["points"] = points;
  rep.values["max_error_vs_reference"] = exact(exact_vs_reference);
  rep.values["max_error_vs_tensor_oracle"] = exact(exact_vs_tensor);
  rep.values["mc_failures"] = exact(static_cast<double>(mc_failures));
  rep.check("exact_matches_reference", exact_vs_reference <= 1e-10, {"max_error_vs_reference"}, "1e-10");
  rep.check("exact_matches_tensor_oracle", exact_vs_tensor <= 1e-10, {"max_error_vs_tensor_oracle"}, "1e-10");
  rep.check("mc_within_5se", mc_failures == 0, {"mc_failures"}, "every point within 5 standard errors");
  rep.plots.push_back({"epr_correlations.csv", csv});
}

std::array<double, 2> pair_of(const std::vector<double>& v, std::size_t offset) { return {v[offset], v[offset + 1]}; }

std::vector<TrialRecord> chsh_records(const Resolved& r, const BipartiteEnsemble* ens) {
  std::vector<TrialRecord> all;
  const auto a = pair_of(r.angles, 0), b = pair_of(r.angles, 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const std::uint64_t first = (2 * i + j) * r.trials;
      const auto recs = ens ? run_trials(*ens, a[i], b[j], ThresholdDetector(r.threshold), r.trials,
                                         RandomSeed{r.seed}, r.policy, first)
                            : lhv_trials(a[i], b[j], r.trials, RandomSeed{r.seed}, first);
      all.insert(all.end(), recs.begin(), recs.end());
    }
  }
  return all;
}

// Party marginals must not depend on the remote setting.
void no_signalling_checks(const Resolved& r, std::span<const TrialRecord> all, Report& rep) {
  auto rate = [&](std::size_t pair, int party) {
    std::size_t k = 0;
    for (std::size_t t = pair * r.trials; t < (pair + 1) * r.trials; ++t) {
      k += party == 1 ? all[t].clicks1[0] : all[t].clicks2[0];
    }
    return static_cast<double>(k) / static_cast<double>(r.trials);
  };
  double worst = 0;
  // Pairs are ordered (a1 b1), (a1 b2), (a2 b1), (a2 b2).
  const std::array<std::array<std::size_t, 2>, 4> compare{{{0, 1}, {2, 3}, {0, 2}, {1, 3}}};
  for (std::size_t c = 0; c < 4; ++c) {
    const int party = c < 2 ? 1 : 2;
    const double p0 = rate(compare[c][0], party), p1 = rate(compare[c][1], party);
    const double se = std::sqrt((p0 * (1 - p0) + p1 * (1 - p1)) / static_cast<double>(r.trials));
    worst = std::max(worst, se > 0 ? std::abs(p0 - p1) / se : (p0 == p1 ? 0.0 : HUGE_VAL));
  }
  rep.values["max_marginal_shift_in_se"] = mc(worst, 1.0, r.trials);
  rep.check("no_signalling", worst <= 5.0, {"max_marginal_shift_in_se"}, "5 standard errors");
}

void run_chsh(const Resolved& r, Report& rep) {
  const auto a = pair_of(r.angles, 0), b = pair_of(r.angles, 2);
  rep.data["settings"] = Json{{"a", a}, {"b", b}, {"provenance", "exact"}};
  std::string curve = "delta,E,standard_error,reference\r\n";

  if (r.source == "singlet") {
    const ChshValue s = chsh(singlet_table(a, b));
    rep.values["S"] = oracle(s.value);
    rep.check("abs_S_equals_2sqrt2", std::abs(std::abs(s.value) - 2 * std::numbers::sqrt2) <= 1e-10, {"S"},
              "1e-10");
    for (int m = 0; m <= 16; ++m) {
      const double delta = m * kPi / 16;
      curve += csv_row({delta, -std::cos(2 * delta), 0.0, -std::cos(2 * delta)});
    }
    rep.plots.push_back({"correlation_curve.csv", curve});
    return;
  }

  const bool field = r.source == "field";
  std::optional<BipartiteEnsemble> ens;
  if (field) ens.emplace(bipartite_ensemble(singlet(), r.epsilon));
  const auto records = chsh_records(r, field ? &*ens : nullptr);
  const CorrelationTable table = table_from_records(records, a, b);
  const ChshValue s = chsh(table);
  const ClickStatistics stats = click_statistics(records);
  rep.values["S"] = mc(s.value, s.standard_error, stats.coincidence_total());
  rep.values["accepted_fraction"] = mc(stats.accepted_fraction(), std::sqrt(stats.accepted_fraction() *
                                                                           (1 - stats.accepted_fraction()) /
                                                                           static_cast<double>(stats.n_trials)),
                                       stats.n_trials);
  rep.data["table"] = Json{{"provenance", "mc"}, {"n", stats.n_trials}, {"table", to_json(table)}};

  if (field) {
    no_signalling_checks(r, records, rep);
    const bool reached = std::abs(s.value) >= 2.6;
    rep.targets.push_back(Json{{"name", "abs_S_at_least_2.6"},
                               {"reached", reached},
                               {"compares", {"S"}},
                               {"note", "empirical target; reported, not enforced"},
                               {"parameters",
                                {{"epsilon", r.epsilon},
                                 {"threshold", r.threshold},
                                 {"policy", r.policy == PostSelection::kKeepSingles ? "keep-singles" : "keep-all"},
                                 {"trials_per_setting", r.trials},
                                 {"provenance", "exact"}}}});

    std::string dbl = "threshold,double_click_rate_1,double_click_rate_2,accepted_fraction\r\n";
    const std::size_t n_scan = std::max<std::size_t>(1, r.trials / 4);
    for (int m = 1; m <= 12; ++m) {
      const double d = 0.25 * m;
      const auto recs = run_trials(*ens, a[0], b[0], ThresholdDetector(d), n_scan, RandomSeed{r.seed},
                                   r.policy, 21 * r.trials);
      const auto st = click_statistics(recs);
      dbl += csv_row({d, st.double_click_rate(1), st.double_click_rate(2), st.accepted_fraction()});
    }
    rep.plots.push_back({"double_click.csv", dbl});
  } else {
    rep.check("lhv_bound", std::abs(s.value) <= 2.0 + 5.0 * s.standard_error, {"S"}, "2 + 5 standard errors");
  }

  for (int m = 0; m <= 16; ++m) {
    const double delta = m * kPi / 16;
    const std::uint64_t first = (4 + static_cast<std::uint64_t>(m)) * r.trials;
    const auto recs = field ? run_trials(*ens, 0.0, delta, ThresholdDetector(r.threshold), r.trials,
                                         RandomSeed{r.seed}, r.policy, first)
                            : lhv_trials(0.0, delta, r.trials, RandomSeed{r.seed}, first);
    const auto c = correlation_from_clicks(recs);
    curve += csv_row({delta, c.value, c.standard_error, -std::cos(2 * delta)});
  }
  rep.plots.push_back({"correlation_curve.csv", curve});
}

void run_kolmogorov(const Resolved& r, Report& rep) {
  const auto a = pair_of(r.angles, 0), b = pair_of(r.angles, 2);
  CorrelationTable table;
  std::string provenance = "mc";
  if (r.source == "singlet") {
    table = singlet_table(a, b);
    provenance = "reference-oracle";
  } else if (r.source == "file") {
    const std::filesystem::path path(r.table);
    std::ifstream in(path);
    if (!in) throw DomainError("kolmogorov: cannot open table file " + r.table);
    if (path.extension() == ".csv") {
      const auto records = read_trials_csv(in);
      table = table_from_records(records, a, b);
    } else {
      Json j;
      try {
        j = Json::parse(in);
      } catch (const Json::exception& e) {
        throw DomainError(std::string("kolmogorov: table file is not valid JSON: ") + e.what());
      }
      table = table_from_json(j);
    }
    if (!table.counts) provenance = "exact";
  } else {
    std::optional<BipartiteEnsemble> ens;
    if (r.source == "field") ens.emplace(bipartite_ensemble(singlet(), r.epsilon));
    table = table_from_records(chsh_records(r, ens ? &*ens : nullptr), a, b);
  }
  Json data_table{{"provenance", provenance}, {"table", to_json(table)}};
  rep.data["table"] = data_table;

  KolmogorovVerdict v;
  try {
    v = kolmogorov_feasible(table);
  } catch (const SignallingData& e) {
    rep.data["rejection"] = e.what();
    rep.check("no_signalling", false, {}, "5 standard errors (1e-9 for exact tables)");
    return;
  }
  rep.data["verdict"] = Json{{"provenance", table.counts ? "mc" : "exact"}, {"verdict", to_json(v)}};
  std::size_t n_total = 0;
  if (table.counts) {
    for (const auto& row : *table.counts) n_total += row[0] + row[1];
  }
  // For sampled tables the quoted error is the sampling scale behind the fit tolerance.
  rep.values["residual"] = table.counts ? mc(v.residual, v.tolerance / 5.0, n_total) : exact(v.residual);
  rep.values["feasible"] = v.feasible;
  rep.check("fine_criterion_agrees", v.fine_agrees, {"residual"}, "same verdict as the eight CHSH inequalities");
  if (r.source == "lhv") rep.check("lhv_feasible", v.feasible, {"residual"}, v.diagnostic);
  if (r.source == "singlet") rep.check("singlet_infeasible", !v.feasible && v.certificate.has_value(), {"residual"},
                                       v.diagnostic);
}

void run_triangle(const Resolved& r, Report& rep) {
  const std::array<double, 3> angles{r.angles[0], r.angles[1], r.angles[2]};
  const TriangleClass cls = triangle_angle_test(angles, r.flat_sum);
  rep.values["angle_sum"] = exact(angles[0] + angles[1] + angles[2]);
  rep.values["flat_sum"] = exact(r.flat_sum);
  rep.values["classification"] = to_string(cls);
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kBorn:
      return "born";
    case ExperimentKind::kDynamics:
      return "dynamics";
    case ExperimentKind::kHessian:
      return "hessian";
    case ExperimentKind::kEpr:
      return "epr";
    case ExperimentKind::kChsh:
      return "chsh";
    case ExperimentKind::kKolmogorov:
      return "kolmogorov";
    case ExperimentKind::kTriangle:
      return "triangle";
  }
  return "born";
}

std::optional<ExperimentKind> kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::kBorn, ExperimentKind::kDynamics, ExperimentKind::kHessian, ExperimentKind::kEpr,
                 ExperimentKind::kChsh, ExperimentKind::kKolmogorov, ExperimentKind::kTriangle}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<double> parse_angle(const std::string& text) {
  std::string s = trim(text);
  const auto pos = s.find("pi");
  if (pos == std::string::npos) return parse_real(s);
  std::string coef = trim(s.substr(0, pos));
  std::string rest = trim(s.substr(pos + 2));
  double c = 1.0;
  if (!coef.empty() && coef.back() == '*') coef = trim(coef.substr(0, coef.size() - 1));
  if (coef == "-") {
    c = -1.0;
  } else if (!coef.empty() && coef != "+") {
    const auto v = parse_real(coef);
    if (!v) return std::nullopt;
    c = *v;
  }
  double div = 1.0;
  if (!rest.empty()) {
    if (rest.front() != '/') return std::nullopt;
    const auto v = parse_real(rest.substr(1));
    if (!v || *v == 0.0) return std::nullopt;
    div = *v;
  }
  return c * kPi / div;
}

void apply_setting(ExperimentConfig& config, const std::string& key_in, const std::string& value_in,
                   std::vector<std::string>& diagnostics) {
  std::string key = trim(key_in);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string value = trim(value_in);
  auto bad = [&](const std::string& what) { diagnostics.push_back(key + ": " + what + " (got '" + value + "')"); };
  auto real = [&](std::optional<double>& slot) {
    if (const auto v = parse_real(value)) {
      slot = *v;
    } else {
      bad("expected a number");
    }
  };
  auto count = [&](std::optional<std::size_t>& slot) {
    if (const auto v = parse_count(value)) {
      slot = static_cast<std::size_t>(*v);
    } else {
      bad("expected a non-negative integer");
    }
  };

  if (key == "kind") {
    if (const auto k = kind_from_string(value)) {
      config.kind = *k;
    } else {
      bad("unknown experiment kind; expected born|dynamics|hessian|epr|chsh|kolmogorov|triangle");
    }
  } else if (key == "seed") {
    if (const auto v = parse_count(value)) {
      config.seed = *v;
    } else {
      bad("expected a non-negative integer");
    }
  } else if (key == "dim") {
    count(config.dim);
  } else if (key == "epsilon") {
    real(config.epsilon);
  } else if (key == "threshold") {
    real(config.threshold);
  } else if (key == "trials") {
    count(config.trials);
  } else if (key == "t" || key == "time") {
    real(config.time);
  } else if (key == "dt") {
    real(config.dt);
  } else if (key == "horizon") {
    real(config.horizon);
  } else if (key == "flat_sum") {
    if (const auto v = parse_angle(value)) {
      config.flat_sum = *v;
    } else {
      bad("expected an angle");
    }
  } else if (key == "angles") {
    std::vector<double> angles;
    for (const auto& part : split(value, ',')) {
      const auto v = parse_angle(part);
      if (!v) {
        bad("expected a comma-separated list of angles");
        return;
      }
      angles.push_back(*v);
    }
    config.angles = angles;
  } else if (key == "source") {
    config.source = value;
  } else if (key == "table") {
    config.table = value;
  } else if (key == "policy") {
    if (value == "keep-singles" || value == "singles") {
      config.policy = PostSelection::kKeepSingles;
    } else if (value == "keep-all" || value == "all") {
      config.policy = PostSelection::kKeepAll;
    } else {
      bad("expected keep-singles or keep-all");
    }
  } else if (key == "out") {
    config.out_dir = value;
  } else if (key == "workers") {
    if (const auto v = parse_count(value)) {
      config.workers = static_cast<unsigned>(*v);
    } else {
      bad("expected a non-negative integer");
    }
  } else {
    diagnostics.push_back("unknown configuration key '" + key + "'");
  }
}

void apply_config_text(ExperimentConfig& config, const std::string& text, std::vector<std::string>& diagnostics) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      diagnostics.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    apply_setting(config, line.substr(0, eq), line.substr(eq + 1), diagnostics);
  }
}

void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path,
                       std::vector<std::string>& diagnostics) {
  std::ifstream in(path);
  if (!in) {
    diagnostics.push_back("cannot read config file " + path.string());
    return;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str(), diagnostics);
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> d;
  if (!c.kind) d.push_back("kind is required (born|dynamics|hessian|epr|chsh|kolmogorov|triangle)");
  if (!c.seed) d.push_back("seed is required");
  if (c.epsilon && !(*c.epsilon >= 0)) d.push_back("epsilon must be non-negative");
  if (c.threshold && !(*c.threshold >= 0)) d.push_back("threshold must be non-negative");
  if (c.trials && *c.trials < 1) d.push_back("trials must be at least 1");
  if (c.dim && *c.dim < 1) d.push_back("dim must be at least 1");
  if (c.dt && !(*c.dt > 0)) d.push_back("dt must be positive");
  if (c.time && !(*c.time >= 0)) d.push_back("t must be non-negative");
  if (c.horizon && !(*c.horizon >= 0)) d.push_back("horizon must be non-negative");
  if (c.flat_sum && !(*c.flat_sum > 0)) d.push_back("flat_sum must be positive");
  if (!c.kind) return d;

  const ExperimentKind k = *c.kind;
  const bool bipartite = k == ExperimentKind::kEpr || k == ExperimentKind::kChsh || k == ExperimentKind::kKolmogorov;
  if (c.dim && *c.dim > 64) d.push_back("dim must be at most 64");
  if (bipartite && c.dim && *c.dim != 2) d.push_back("dim must be 2 for " + to_string(k) + " (two qubits)");
  if ((k == ExperimentKind::kBorn || k == ExperimentKind::kEpr) && c.trials && *c.trials < 2) {
    d.push_back("trials must be at least 2 for Monte Carlo estimates");
  }
  const double eps_star = std::sqrt(0.5) - 0.5;
  const std::string source = c.source.value_or(k == ExperimentKind::kKolmogorov ? "lhv" : "field");
  const bool uses_field = k == ExperimentKind::kEpr || (k != ExperimentKind::kEpr && bipartite && source == "field");
  if (uses_field && c.epsilon && *c.epsilon >= 0 && *c.epsilon < eps_star - 1e-10) {
    d.push_back("epsilon must be at least eps* = " + format_double(eps_star) + " for the singlet");
  }
  if (c.source) {
    const std::vector<std::string> allowed =
        k == ExperimentKind::kChsh         ? std::vector<std::string>{"field", "lhv", "singlet"}
        : k == ExperimentKind::kKolmogorov ? std::vector<std::string>{"field", "lhv", "singlet", "file"}
                                           : std::vector<std::string>{};
    if (std::find(allowed.begin(), allowed.end(), *c.source) == allowed.end()) {
      d.push_back("source '" + *c.source + "' is not valid for " + to_string(k));
    }
  }
  if (k == ExperimentKind::kKolmogorov && source == "file" && (!c.table || c.table->empty())) {
    d.push_back("table is required when source = file");
  }
  if (c.angles) {
    const std::size_t n = c.angles->size();
    if (k == ExperimentKind::kTriangle && n != 3) d.push_back("angles must list 3 values for triangle");
    if ((k == ExperimentKind::kChsh || k == ExperimentKind::kKolmogorov) && n != 4) {
      d.push_back("angles must list 4 values (a1, a2, b1, b2)");
    }
    if (k == ExperimentKind::kEpr && (n < 2 || n % 2 != 0)) d.push_back("angles must list (theta1, theta2) pairs");
    if (k == ExperimentKind::kTriangle && n == 3) {
      const double flat = c.flat_sum.value_or(kPi);
      for (double x : *c.angles) {
        if (!(x > 0 && x < flat)) {
          d.push_back("each triangle angle must lie in (0, flat_sum)");
          break;
        }
      }
    }
    if ((k == ExperimentKind::kChsh || k == ExperimentKind::kKolmogorov) && n == 4 &&
        (std::abs((*c.angles)[0] - (*c.angles)[1]) <= 1e-12 || std::abs((*c.angles)[2] - (*c.angles)[3]) <= 1e-12)) {
      d.push_back("the two settings of each party must differ");
    }
  }
  return d;
}

Json resolved_config(const ExperimentConfig& config) {
  const Resolved r = resolve(config);
  Json j;
  j["kind"] = to_string(r.kind);
  j["seed"] = r.seed;
  switch (r.kind) {
    case ExperimentKind::kBorn:
      j["dim"] = r.dim;
      j["epsilon"] = r.epsilon;
      j["trials"] = r.trials;
      break;
    case ExperimentKind::kDynamics:
      j["dim"] = r.dim;
      j["epsilon"] = r.epsilon;
      j["t"] = r.time;
      j["dt"] = r.dt;
      j["horizon"] = r.horizon;
      break;
    case ExperimentKind::kHessian:
      j["dim"] = r.dim;
      break;
    case ExperimentKind::kEpr:
      j["epsilon"] = r.epsilon;
      j["angles"] = r.angles;
      j["trials"] = r.trials;
      break;
    case ExperimentKind::kChsh:
    case ExperimentKind::kKolmogorov:
      j["source"] = r.source;
      j["angles"] = r.angles;
      if (r.source == "field") {
        j["epsilon"] = r.epsilon;
        j["threshold"] = r.threshold;
        j["policy"] = r.policy == PostSelection::kKeepSingles ? "keep-singles" : "keep-all";
      }
      if (r.source == "field" || r.source == "lhv") j["trials"] = r.trials;
      if (r.source == "file") j["table"] = r.table;
      break;
    case ExperimentKind::kTriangle:
      j["angles"] = r.angles;
      j["flat_sum"] = r.flat_sum;
      break;
  }
  return j;
}

RunOutcome run(const ExperimentConfig& config) {
  const auto problems = validate(config);
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw DomainError(msg);
  }
  const Resolved r = resolve(config);
  const unsigned previous = worker_count();
  set_worker_count(config.workers);
  Report rep;
  try {
    switch (r.kind) {
      case ExperimentKind::kBorn:
        run_born(r, rep);
        break;
      case ExperimentKind::kDynamics:
        run_dynamics(r, rep);
        break;
      case ExperimentKind::kHessian:
        run_hessian(r, rep);
        break;
      case ExperimentKind::kEpr:
        run_epr(r, rep);
        break;
      case ExperimentKind::kChsh:
        run_chsh(r, rep);
        break;
      case ExperimentKind::kKolmogorov:
        run_kolmogorov(r, rep);
        break;
      case ExperimentKind::kTriangle:
        run_triangle(r, rep);
        break;
    }
  } catch (...) {
    set_worker_count(previous);
    throw;
  }
  set_worker_count(previous);

  RunOutcome out;
  out.results["kind"] = to_string(r.kind);
  out.results["passed"] = rep.passed;
  out.results["values"] = rep.values;
  out.results["checks"] = rep.checks;
  if (!rep.targets.empty()) out.results["targets"] = rep.targets;
  if (!rep.data.empty()) out.results["data"] = rep.data;
  out.plots = std::move(rep.plots);
  out.passed = rep.passed;
  return out;
}

void write_artifacts(const std::filesystem::path& dir, const ExperimentConfig& config, const RunOutcome& outcome) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << content;
  };
  write("results.json", outcome.results.dump(2) + "\n");
  Json artifacts = Json::array({"results.json"});
  for (const auto& p : outcome.plots) {
    write(p.name, p.content);
    artifacts.push_back(p.name);
  }
  artifacts.push_back("manifest.json");
  Json manifest;
  manifest["tool"] = "pcsft";
  manifest["version"] = kVersion;
  manifest["config"] = resolved_config(config);
  manifest["artifacts"] = artifacts;
  write("manifest.json", manifest.dump(2) + "\n");
}

}  // namespace pcsft::cli
