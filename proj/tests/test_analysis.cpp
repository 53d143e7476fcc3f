#include "doctest.h"

#include <cmath>
#include <numbers>
#include <set>

#include "pcsft/analysis.hpp"
#include "pcsft/rng.hpp"

using namespace pcsft;

namespace {

constexpr double kPi = std::numbers::pi;
const std::array<double, 2> kA{0.0, kPi / 4};
const std::array<double, 2> kB{kPi / 8, -kPi / 8};

SettingGrid<OutcomeTable> mix(const std::vector<std::pair<double, SettingGrid<OutcomeTable>>>& parts) {
  SettingGrid<OutcomeTable> f{};
  for (const auto& [w, box] : parts)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < 2; ++y) f[i][j][x][y] += w * box[i][j][x][y];
  return f;
}

// Brute force max over deterministic assignments of |S_k|, the local bound being 2.
void check_certificate(const KolmogorovVerdict& v, const SettingGrid<OutcomeTable>& f) {
  REQUIRE(v.certificate.has_value());
  const auto& y = *v.certificate;
  for (std::size_t a = 0; a < 16; ++a) {
    double s = y[16];
    for (std::size_t c = 0; c < 16; ++c) s += y[c] * vertex_cell(a, c);
    CHECK(s <= 1e-7);
  }
  double s = y[16];
  for (std::size_t c = 0; c < 16; ++c) s += y[c] * f[c / 8][(c / 4) % 2][(c / 2) % 2][c % 2];
  CHECK(s == doctest::Approx(v.residual).epsilon(1e-6));
  CHECK(s > 0);
}

}  // namespace

TEST_CASE("chsh examples") {
  const auto singlet = singlet_table(kA, kB);
  CHECK(chsh(singlet).value == doctest::Approx(-2 * std::sqrt(2.0)));
  CHECK(chsh(singlet).standard_error == 0.0);
  CHECK(chsh(table_from_frequencies(kA, kB, deterministic_box(0))).value == doctest::Approx(2.0));
  CHECK(std::abs(chsh(table_from_frequencies(kA, kB, pr_box(0, 0, 0))).value) == doctest::Approx(4.0));
  const auto fam = chsh_family(singlet);
  CHECK(fam[3] == doctest::Approx(chsh(singlet).value));
  CHECK_FALSE(fine_criterion(singlet));
}

TEST_CASE("deterministic assignments enumerate all sign patterns") {
  std::set<std::array<int, 4>> seen;
  for (std::size_t k = 0; k < 16; ++k) {
    const auto v = deterministic_assignment(k);
    for (int s : v) CHECK(std::abs(s) == 1);
    seen.insert(v);
    double sum = 0;
    for (std::size_t c = 0; c < 16; ++c) sum += vertex_cell(k, c);
    CHECK(sum == 4.0);
    for (double s : chsh_family(table_from_frequencies(kA, kB, deterministic_box(k)))) CHECK(std::abs(s) == 2.0);
  }
  CHECK(seen.size() == 16);
  CHECK(cell_index(1, 1, 1, 1) == 15);
}

TEST_CASE("singlet table has no joint distribution") {
  const auto f = *singlet_table(kA, kB).frequencies;
  const auto v = kolmogorov_feasible(singlet_table(kA, kB));
  CHECK_FALSE(v.feasible);
  CHECK(v.fine_agrees);
  CHECK(v.residual == doctest::Approx(2 * std::sqrt(2.0) - 2).epsilon(1e-6));
  check_certificate(v, f);
  const auto j = to_json(v);
  CHECK(j["feasible"] == false);
  CHECK(j["certificate"].size() == 17);
}

TEST_CASE("fine criterion agrees with linear feasibility on random boxes") {
  CounterRng rng(RandomSeed{61}, 0);
  std::vector<SettingGrid<OutcomeTable>> vertices;
  for (std::size_t k = 0; k < 16; ++k) vertices.push_back(deterministic_box(k));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int g = 0; g < 2; ++g) vertices.push_back(pr_box(a, b, g));
  int infeasible = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    // Heavy-tailed random weights: a flat mixture of all PR boxes
    // averages to a local box, so few vertices must dominate for both verdicts.
    std::vector<std::pair<double, SettingGrid<OutcomeTable>>> parts;
    double total = 0;
    for (std::size_t k = 0; k < vertices.size(); ++k) {
      const double w = std::pow(rng.uniform(), 8.0) * -std::log(1.0 - rng.uniform());
      parts.emplace_back(w, vertices[k]);
      total += w;
    }
    for (auto& [w, box] : parts) w /= total;
    const auto f = mix(parts);
    const auto table = table_from_frequencies(kA, kB, f);
    const auto v = kolmogorov_feasible(table);
    CHECK(v.fine_agrees);
    CHECK(v.feasible == fine_criterion(table));
    if (!v.feasible) {
      ++infeasible;
      check_certificate(v, f);
    } else {
      double sum = 0;
      for (double w : v.witness) {
        CHECK(w >= -1e-12);
        sum += w;
      }
      CHECK(sum == doctest::Approx(1.0));
    }
  }
  CHECK(infeasible > 50);
  CHECK(infeasible < 950);
}

TEST_CASE("feasibility is invariant under outcome relabelling") {
  CounterRng rng(RandomSeed{62}, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const double w = rng.uniform();
    const auto f = mix({{w, pr_box(0, 0, 0)}, {1 - w, deterministic_box(trial % 16)}});
    // Flip the outcome of A1.
    auto g = f;
    for (int j = 0; j < 2; ++j)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) g[0][j][x][y] = f[0][j][1 - x][y];
    const auto vf = kolmogorov_feasible(table_from_frequencies(kA, kB, f));
    const auto vg = kolmogorov_feasible(table_from_frequencies(kA, kB, g));
    CHECK(vf.feasible == vg.feasible);
    CHECK(vf.residual == doctest::Approx(vg.residual).epsilon(1e-9));
  }
}

TEST_CASE("signalling and malformed tables are rejected") {
  auto f = deterministic_box(0);
  f[0][1] = {{{0, 0}, {0, 1}}};  // A1 flips with b
  CHECK_THROWS_AS(kolmogorov_feasible(table_from_frequencies(kA, kB, f)), SignallingData);
  auto bad = deterministic_box(0);
  bad[0][0][0][0] = 0.5;
  CHECK_THROWS_AS(table_from_frequencies(kA, kB, bad).validate(), DomainError);
  CorrelationTable only_e = singlet_table(kA, kB);
  only_e.frequencies.reset();
  CHECK_THROWS_AS(kolmogorov_feasible(only_e), DomainError);
}

TEST_CASE("local hidden variable data") {
  std::vector<TrialRecord> rec;
  std::uint64_t first = 0;
  for (double a : kA) {
    for (double b : kB) {
      const auto part = lhv_trials(a, b, 20000, RandomSeed{7}, first);
      rec.insert(rec.end(), part.begin(), part.end());
      first += 20000;
    }
  }
  const auto table = table_from_records(rec, kA, kB);
  REQUIRE(table.counts.has_value());
  const auto s = chsh(table);
  CHECK(std::abs(s.value) <= 2.0 + 5 * s.standard_error);
  const auto v = kolmogorov_feasible(table);
  CHECK(v.feasible);
  CHECK(v.fine_agrees);
  // Exact LHV correlation E = -(1 - 4|a - b|/pi) for |a - b| <= pi/2.
  const double e = table.correlations[0][0]->value;
  CHECK(std::abs(e + 0.5) <= 5 * table.correlations[0][0]->standard_error);
}

TEST_CASE("table json round trip") {
  const auto t = singlet_table(kA, kB);
  const auto back = table_from_json(to_json(t));
  CHECK(back.a == t.a);
  CHECK(back.b == t.b);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(back.correlations[i][j]->value == t.correlations[i][j]->value);
  CHECK(back.frequencies == t.frequencies);
  CHECK_THROWS_AS(table_from_json(Json{{"a", 1}}), DomainError);
}

TEST_CASE("triangle angle test") {
  CHECK(triangle_angle_test({kPi / 3, kPi / 3, kPi / 3}) == TriangleClass::kFlat);
  CHECK(triangle_angle_test({kPi / 4, kPi / 4, kPi / 4}) == TriangleClass::kDeficit);
  CHECK(triangle_angle_test({kPi / 2, kPi / 2, kPi / 2}) == TriangleClass::kExcess);
  CHECK(triangle_angle_test({0.5, 0.5, 0.5}) == TriangleClass::kDeficit);
  CHECK(triangle_angle_test({kPi / 2, kPi / 2, kPi / 4}) == TriangleClass::kExcess);
  CHECK(triangle_angle_test({1.0, 1.0, 1.0}, 3.0) == TriangleClass::kFlat);
  CHECK_THROWS_AS(triangle_angle_test({0.0, kPi / 2, kPi / 2}), DomainError);
  CHECK_THROWS_AS(triangle_angle_test({kPi, 0.1, 0.1}), DomainError);
  CHECK(to_string(TriangleClass::kExcess) == "excess");
}
