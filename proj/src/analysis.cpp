#include "pcsft/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pcsft/parallel.hpp"

namespace pcsft {

namespace {

constexpr double kExactTolerance = 1e-9;

double correlation_of(const OutcomeTable& p) { return p[0][0] + p[1][1] - p[0][1] - p[1][0]; }

std::string setting_name(std::size_t i, std::size_t j) {
  return "(a" + std::to_string(i + 1) + ", b" + std::to_string(j + 1) + ")";
}

}  // namespace

void CorrelationTable::validate() const {
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const auto& e = correlations[i][j];
      if (e && !(std::abs(e->value) <= 1.0 + kExactTolerance)) {
        throw DomainError("correlation table: |E| > 1 at " + setting_name(i, j));
      }
      if (!frequencies) continue;
      const OutcomeTable& p = (*frequencies)[i][j];
      double sum = 0;
      for (const auto& row : p) {
        for (double v : row) {
          if (!(v >= 0.0)) throw DomainError("correlation table: negative frequency at " + setting_name(i, j));
          sum += v;
        }
      }
      if (std::abs(sum - 1.0) > kExactTolerance) {
        throw DomainError("correlation table: frequencies at " + setting_name(i, j) + " sum to " + format_double(sum));
      }
    }
  }
}

CorrelationTable table_from_frequencies(std::array<double, 2> a, std::array<double, 2> b,
                                        const SettingGrid<OutcomeTable>& frequencies,
                                        std::optional<SettingGrid<std::size_t>> counts) {
  CorrelationTable t;
  t.a = a;
  t.b = b;
  t.frequencies = frequencies;
  t.counts = counts;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double e = correlation_of(frequencies[i][j]);
      double se = 0;
      if (counts) {
        const auto n = static_cast<double>((*counts)[i][j]);
        if (n <= 0) throw DomainError("correlation table: zero count at " + setting_name(i, j));
        se = std::sqrt(std::max(0.0, 1.0 - e * e) / n);
      }
      t.correlations[i][j] = CorrelationEntry{e, se};
    }
  }
  t.validate();
  return t;
}

CorrelationTable singlet_table(std::array<double, 2> a, std::array<double, 2> b) {
  SettingGrid<OutcomeTable> f{};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double c = std::cos(2.0 * (a[i] - b[j]));
      for (std::size_t x = 0; x < 2; ++x) {
        for (std::size_t y = 0; y < 2; ++y) {
          const double xy = x == y ? 1.0 : -1.0;
          f[i][j][x][y] = (1.0 - xy * c) / 4.0;
        }
      }
    }
  }
  return table_from_frequencies(a, b, f);
}

CorrelationTable table_from_records(std::span<const TrialRecord> records, std::array<double, 2> a,
                                    std::array<double, 2> b) {
  auto match = [](const std::array<double, 2>& s, double theta) -> int {
    for (int k = 0; k < 2; ++k) {
      if (std::abs(s[k] - theta) <= 1e-12) return k;
    }
    return -1;
  };
  SettingGrid<std::array<std::array<std::size_t, 2>, 2>> n{};
  for (const auto& r : records) {
    const int i = match(a, r.theta1);
    const int j = match(b, r.theta2);
    if (i < 0 || j < 0 || !r.accepted) continue;
    if (r.class1 != ClickClass::kSingle || r.class2 != ClickClass::kSingle) continue;
    ++n[i][j][r.clicks1[0] ? 0 : 1][r.clicks2[0] ? 0 : 1];
  }

  CorrelationTable t;
  t.a = a;
  t.b = b;
  SettingGrid<OutcomeTable> f{};
  SettingGrid<std::size_t> total{};
  bool complete = true;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      total[i][j] = n[i][j][0][0] + n[i][j][0][1] + n[i][j][1][0] + n[i][j][1][1];
      if (total[i][j] == 0) {
        complete = false;
        continue;
      }
      const auto tot = static_cast<double>(total[i][j]);
      for (std::size_t x = 0; x < 2; ++x) {
        for (std::size_t y = 0; y < 2; ++y) f[i][j][x][y] = static_cast<double>(n[i][j][x][y]) / tot;
      }
      const double e = correlation_of(f[i][j]);
      t.correlations[i][j] = CorrelationEntry{e, std::sqrt(std::max(0.0, 1.0 - e * e) / tot)};
    }
  }
  if (complete) {
    t.frequencies = f;
    t.counts = total;
  }
  t.validate();
  return t;
}

ChshValue chsh(const CorrelationTable& table) {
  ChshValue s;
  double var = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const auto& e = table.correlations[i][j];
      if (!e) throw DomainError("chsh: missing correlation at " + setting_name(i, j));
      s.value += (i == 1 && j == 1) ? -e->value : e->value;
      var += e->standard_error * e->standard_error;
    }
  }
  s.standard_error = std::sqrt(var);
  return s;
}

std::array<double, 4> chsh_family(const CorrelationTable& table) {
  std::array<double, 4> e{};
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& c = table.correlations[k / 2][k % 2];
    if (!c) throw DomainError("chsh: missing correlation at " + setting_name(k / 2, k % 2));
    e[k] = c->value;
  }
  const double total = e[0] + e[1] + e[2] + e[3];
  return {total - 2 * e[0], total - 2 * e[1], total - 2 * e[2], total - 2 * e[3]};
}

bool fine_criterion(const CorrelationTable& table, double tolerance) {
  for (double s : chsh_family(table)) {
    if (std::abs(s) > 2.0 + tolerance) return false;
  }
  return true;
}

std::array<int, 4> deterministic_assignment(std::size_t index) {
  std::array<int, 4> v{};
  for (std::size_t k = 0; k < 4; ++k) v[k] = (index >> k) & 1U ? -1 : 1;
  return v;
}

double vertex_cell(std::size_t assignment, std::size_t cell) {
  const std::size_t i = cell / 8, j = (cell / 4) % 2, x = (cell / 2) % 2, y = cell % 2;
  const std::size_t ax = (assignment >> i) & 1U;
  const std::size_t by = (assignment >> (2 + j)) & 1U;
  return ax == x && by == y ? 1.0 : 0.0;
}

// ------------------------------------------------------------ feasibility LP

namespace {

// min sum(u+ + u-) subject to V w + u+ - u- = p and sum(w) + u+ - u- = 1, all
// variables >= 0, solved by the tableau simplex with Bland's rule starting from
// the basis u+ = (p, 1). The normalization slack carries a large cost so the fit
// cannot shrink or inflate the total weight to move closer to the data.
struct FitResult {
  double residual = 0;
  std::array<double, 16> weights{};
  std::array<double, 17> dual{};
};

FitResult l1_fit(const std::array<double, 16>& p) {
  constexpr std::size_t m = 17, nw = 16, ncol = nw + 2 * m;
  constexpr double kPivotTol = 1e-12;
  std::vector<std::array<double, ncol + 1>> t(m);
  std::array<std::size_t, m> basis{};
  for (std::size_t r = 0; r < m; ++r) {
    t[r].fill(0.0);
    for (std::size_t a = 0; a < nw; ++a) t[r][a] = r < 16 ? vertex_cell(a, r) : 1.0;
    t[r][nw + r] = 1.0;
    t[r][nw + m + r] = -1.0;
    t[r][ncol] = r < 16 ? p[r] : 1.0;
    basis[r] = nw + r;
  }
  constexpr double kNormCost = 100.0;
  auto cost = [&](std::size_t col) {
    if (col < nw) return 0.0;
    return (col - nw) % m == m - 1 ? kNormCost : 1.0;
  };

  std::array<double, ncol> reduced{};
  auto update_reduced = [&] {
    for (std::size_t c = 0; c < ncol; ++c) {
      double z = 0;
      for (std::size_t r = 0; r < m; ++r) z += cost(basis[r]) * t[r][c];
      reduced[c] = cost(c) - z;
    }
  };

  for (int iter = 0; iter < 10000; ++iter) {
    update_reduced();
    std::size_t enter = ncol;
    for (std::size_t c = 0; c < ncol; ++c) {
      if (reduced[c] < -kPivotTol) {
        enter = c;
        break;
      }
    }
    if (enter == ncol) break;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m; ++r) {
      if (t[r][enter] > kPivotTol) best = std::min(best, t[r][ncol] / t[r][enter]);
    }
    std::size_t leave = m;
    for (std::size_t r = 0; r < m; ++r) {
      if (t[r][enter] <= kPivotTol || t[r][ncol] / t[r][enter] > best + kPivotTol) continue;
      if (leave == m || basis[r] < basis[leave]) leave = r;
    }
    if (leave == m) throw NumericalError("kolmogorov_feasible: unbounded fit (cannot happen for bounded data)");
    const double piv = t[leave][enter];
    for (double& v : t[leave]) v /= piv;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == leave || t[r][enter] == 0.0) continue;
      const double f = t[r][enter];
      for (std::size_t c = 0; c <= ncol; ++c) t[r][c] -= f * t[leave][c];
    }
    basis[leave] = enter;
  }
  update_reduced();

  FitResult out;
  for (std::size_t r = 0; r < m; ++r) {
    const double v = std::max(0.0, t[r][ncol]);
    if (basis[r] < nw) out.weights[basis[r]] = v;
    out.residual += cost(basis[r]) * v;
  }
  for (std::size_t r = 0; r < m; ++r) out.dual[r] = cost(nw + r) - reduced[nw + r];
  return out;
}

}  // namespace

KolmogorovVerdict kolmogorov_feasible(const CorrelationTable& table) {
  if (!table.frequencies) throw DomainError("kolmogorov_feasible: full outcome frequencies are required");
  table.validate();
  const auto& f = *table.frequencies;
  const bool sampled = table.counts.has_value();

  // No-signalling: each party's marginal must not depend on the remote setting.
  std::ostringstream issues;
  auto check = [&](double p0, double p1, double n0, double n1, const std::string& what) {
    double tol = kExactTolerance;
    if (sampled) tol += 5.0 * std::sqrt(p0 * (1 - p0) / n0 + p1 * (1 - p1) / n1);
    if (std::abs(p0 - p1) > tol) {
      issues << what << " marginal changes with the remote setting (" << format_double(p0) << " vs "
             << format_double(p1) << "); ";
    }
  };
  auto n_of = [&](std::size_t i, std::size_t j) {
    return sampled ? static_cast<double>((*table.counts)[i][j]) : 1.0;
  };
  for (std::size_t i = 0; i < 2; ++i) {
    check(f[i][0][0][0] + f[i][0][0][1], f[i][1][0][0] + f[i][1][0][1], n_of(i, 0), n_of(i, 1),
          "party 1 setting a" + std::to_string(i + 1));
  }
  for (std::size_t j = 0; j < 2; ++j) {
    check(f[0][j][0][0] + f[0][j][1][0], f[1][j][0][0] + f[1][j][1][0], n_of(0, j), n_of(1, j),
          "party 2 setting b" + std::to_string(j + 1));
  }
  if (!issues.str().empty()) throw SignallingData("kolmogorov_feasible: signalling data rejected: " + issues.str());

  std::array<double, 16> p{};
  for (std::size_t c = 0; c < 16; ++c) p[c] = f[c / 8][(c / 4) % 2][(c / 2) % 2][c % 2];
  const FitResult fit = l1_fit(p);

  KolmogorovVerdict v;
  v.tolerance = kExactTolerance;
  if (sampled) {
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) v.tolerance += 5.0 / std::sqrt(n_of(i, j));
    }
  }
  v.residual = fit.residual;
  v.witness = fit.weights;
  v.feasible = fit.residual <= v.tolerance;
  if (!v.feasible) v.certificate = fit.dual;
  v.chsh_values = chsh_family(table);

  double chsh_tol = kExactTolerance;
  if (sampled) chsh_tol += 5.0 * chsh(table).standard_error;
  v.fine_agrees = fine_criterion(table, chsh_tol) == v.feasible;

  std::ostringstream msg;
  if (v.feasible) {
    msg << "feasible: a joint distribution over the 16 assignments reproduces the table (L1 residual "
        << format_double(v.residual) << ")";
  } else {
    const auto it = std::max_element(v.chsh_values.begin(), v.chsh_values.end(),
                                     [](double x, double y) { return std::abs(x) < std::abs(y); });
    msg << "infeasible: minimal L1 residual " << format_double(v.residual) << " exceeds "
        << format_double(v.tolerance) << "; largest CHSH combination S" << (it - v.chsh_values.begin()) << " = "
        << format_double(*it);
  }
  v.diagnostic = msg.str();
  return v;
}

SettingGrid<OutcomeTable> deterministic_box(std::size_t assignment) {
  if (assignment >= 16) throw DomainError("deterministic_box: assignment index must be < 16");
  SettingGrid<OutcomeTable> f{};
  for (std::size_t c = 0; c < 16; ++c) f[c / 8][(c / 4) % 2][(c / 2) % 2][c % 2] = vertex_cell(assignment, c);
  return f;
}

SettingGrid<OutcomeTable> pr_box(int alpha, int beta, int gamma) {
  SettingGrid<OutcomeTable> f{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const int parity = (i & j) ^ (alpha & i) ^ (beta & j) ^ (gamma & 1);
      for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) f[i][j][x][y] = (x ^ y) == parity ? 0.5 : 0.0;
      }
    }
  }
  return f;
}

std::vector<TrialRecord> lhv_trials(double theta1, double theta2, std::size_t n_trials, RandomSeed seed,
                                    std::uint64_t first_trial) {
  if (n_trials == 0) throw DomainError("lhv_trials: n_trials must be at least 1");
  std::vector<TrialRecord> out(n_trials);
  for_each_block(n_trials, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      CounterRng rng(seed, first_trial + i);
      const double lambda = std::numbers::pi * rng.uniform();
      const bool a_plus = std::cos(2.0 * (theta1 - lambda)) >= 0.0;
      const bool b_plus = std::cos(2.0 * (theta2 - lambda)) < 0.0;
      TrialRecord& r = out[i];
      r.theta1 = theta1;
      r.theta2 = theta2;
      r.clicks1 = {a_plus, !a_plus};
      r.clicks2 = {b_plus, !b_plus};
      r.class1 = ClickClass::kSingle;
      r.class2 = ClickClass::kSingle;
      r.accepted = true;
    }
  });
  return out;
}

// ------------------------------------------------------------------------ JSON

Json to_json(const ChshValue& s) {
  return Json{{"S", s.value}, {"standard_error", s.standard_error}};
}

Json to_json(const CorrelationTable& table) {
  Json j;
  j["a"] = table.a;
  j["b"] = table.b;
  Json corr = Json::array();
  for (std::size_t i = 0; i < 2; ++i) {
    Json row = Json::array();
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& e = table.correlations[i][k];
      row.push_back(e ? Json{{"E", e->value}, {"standard_error", e->standard_error}} : Json(nullptr));
    }
    corr.push_back(row);
  }
  j["correlations"] = corr;
  if (table.frequencies) j["frequencies"] = *table.frequencies;
  if (table.counts) j["counts"] = *table.counts;
  return j;
}

Json to_json(const KolmogorovVerdict& v) {
  Json j;
  j["feasible"] = v.feasible;
  j["residual"] = v.residual;
  j["tolerance"] = v.tolerance;
  j["witness"] = v.witness;
  j["certificate"] = v.certificate ? Json(*v.certificate) : Json(nullptr);
  j["chsh_family"] = v.chsh_values;
  j["fine_agrees"] = v.fine_agrees;
  j["diagnostic"] = v.diagnostic;
  return j;
}

CorrelationTable table_from_json(const Json& j) {
  try {
    const auto a = j.at("a").get<std::array<double, 2>>();
    const auto b = j.at("b").get<std::array<double, 2>>();
    if (j.contains("frequencies")) {
      std::optional<SettingGrid<std::size_t>> counts;
      if (j.contains("counts")) counts = j.at("counts").get<SettingGrid<std::size_t>>();
      return table_from_frequencies(a, b, j.at("frequencies").get<SettingGrid<OutcomeTable>>(), counts);
    }
    CorrelationTable t;
    t.a = a;
    t.b = b;
    const Json& corr = j.at("correlations");
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t k = 0; k < 2; ++k) {
        const Json& e = corr.at(i).at(k);
        if (e.is_null()) continue;
        t.correlations[i][k] = CorrelationEntry{e.at("E").get<double>(), e.value("standard_error", 0.0)};
      }
    }
    t.validate();
    return t;
  } catch (const Json::exception& e) {
    throw DomainError(std::string("correlation table JSON: ") + e.what());
  }
}

std::string to_string(TriangleClass c) {
  switch (c) {
    case TriangleClass::kFlat:
      return "flat";
    case TriangleClass::kDeficit:
      return "deficit";
    case TriangleClass::kExcess:
      return "excess";
  }
  return "flat";
}

TriangleClass triangle_angle_test(std::array<double, 3> angles, double flat_sum, double tolerance) {
  for (double x : angles) {
    if (!(x > 0.0 && x < flat_sum)) throw DomainError("triangle_angle_test: each angle must lie in (0, flat_sum)");
  }
  const double sum = angles[0] + angles[1] + angles[2];
  if (std::abs(sum - flat_sum) <= tolerance) return TriangleClass::kFlat;
  return sum < flat_sum ? TriangleClass::kDeficit : TriangleClass::kExcess;
}

}  // namespace pcsft
