#pragma once

// Statistics of two-party, two-setting, two-outcome click data: the CHSH
// combination, existence of a joint distribution for the four +-1 variables,
// and the triangle angle-sum comparison.
//
// Outcome index 0 is +1 and index 1 is -1 throughout, matching channel 0 ("+")
// of the detectors.

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcsft/detection.hpp"
#include "pcsft/error.hpp"
#include "pcsft/rng.hpp"
#include "pcsft/serialize.hpp"

namespace pcsft {

/// p[x][y] for one setting pair.
using OutcomeTable = std::array<std::array<double, 2>, 2>;
template <class T>
using SettingGrid = std::array<std::array<T, 2>, 2>;  ///< indexed [i][j] for settings a_i, b_j

struct CorrelationEntry {
  double value = 0;
  double standard_error = 0;
};

struct CorrelationTable {
  std::array<double, 2> a{};
  std::array<double, 2> b{};
  SettingGrid<std::optional<CorrelationEntry>> correlations{};
  std::optional<SettingGrid<OutcomeTable>> frequencies;
  /// Sample size behind each setting pair; absent for exact tables.
  std::optional<SettingGrid<std::size_t>> counts;

  /// Throws DomainError on |E| > 1, negative frequencies or per-pair sums
  /// off by more than 1e-9.
  void validate() const;
};

/// E = p++ + p-- - p+- - p-+, with sqrt((1 - E^2) / n) errors when counts are given.
CorrelationTable table_from_frequencies(std::array<double, 2> a, std::array<double, 2> b,
                                        const SettingGrid<OutcomeTable>& frequencies,
                                        std::optional<SettingGrid<std::size_t>> counts = std::nullopt);

/// Quantum singlet prediction p(x, y) = (1 - x y cos 2(a - b)) / 4.
CorrelationTable singlet_table(std::array<double, 2> a, std::array<double, 2> b);

/// Builds the table from accepted single/single coincidences, grouping records
/// by setting (angles matched within 1e-12).
CorrelationTable table_from_records(std::span<const TrialRecord> records, std::array<double, 2> a,
                                    std::array<double, 2> b);

struct ChshValue {
  double value = 0;
  double standard_error = 0;
};

/// S = E11 + E12 + E21 - E22, errors added in quadrature.
ChshValue chsh(const CorrelationTable& table);

/// The four CHSH combinations, S_k with the minus sign on term k (row-major
/// setting order); S_3 is chsh(). Fine's eight inequalities are |S_k| <= 2.
std::array<double, 4> chsh_family(const CorrelationTable& table);

/// True iff all eight CHSH inequalities hold within `tolerance`.
bool fine_criterion(const CorrelationTable& table, double tolerance = 1e-9);

/// Raised for tables whose marginals depend on the remote setting.
class SignallingData : public DomainError {
 public:
  using DomainError::DomainError;
};

/// The 16 deterministic assignments, bit k of the index set means the k-th
/// variable of (A1, A2, B1, B2) is -1.
std::array<int, 4> deterministic_assignment(std::size_t index);

struct KolmogorovVerdict {
  bool feasible = false;
  double residual = 0;    ///< minimal L1 distance from the data to the local polytope
  double tolerance = 0;
  std::array<double, 16> witness{};  ///< joint distribution over assignments (best fit when infeasible)
  /// Farkas vector: entries 0..15 weight the (i, j, x, y) cells and entry 16 is
  /// a constant, so that sum_c y_c v_c + y_16 <= 0 for every deterministic
  /// assignment v while sum_c y_c p_c + y_16 = residual > 0 for the data.
  std::optional<std::array<double, 17>> certificate;
  std::array<double, 4> chsh_values{};
  bool fine_agrees = true;
  std::string diagnostic;
};

/// Cell index i * 8 + j * 4 + x * 2 + y.
constexpr std::size_t cell_index(std::size_t i, std::size_t j, std::size_t x, std::size_t y) {
  return i * 8 + j * 4 + x * 2 + y;
}

/// Value (0 or 1) of cell (i, j, x, y) for a deterministic assignment.
double vertex_cell(std::size_t assignment, std::size_t cell);

/// Joint-distribution existence by linear feasibility over the 16 assignments.
/// Exact tables use tolerance 1e-9; with counts the no-signalling check and the
/// fit tolerance scale with the sampling error (5 standard errors). Signalling
/// tables throw SignallingData.
KolmogorovVerdict kolmogorov_feasible(const CorrelationTable& table);

/// Extremal no-signalling tables: the local deterministic boxes and the eight
/// PR boxes x XOR y = i j XOR alpha i XOR beta j XOR gamma.
SettingGrid<OutcomeTable> deterministic_box(std::size_t assignment);
SettingGrid<OutcomeTable> pr_box(int alpha, int beta, int gamma);

/// Local hidden variable source: lambda uniform on [0, pi), A = sign cos 2(a - lambda),
/// B = -sign cos 2(b - lambda). Every trial is a single/single coincidence.
std::vector<TrialRecord> lhv_trials(double theta1, double theta2, std::size_t n_trials, RandomSeed seed,
                                    std::uint64_t first_trial = 0);

Json to_json(const ChshValue& s);
Json to_json(const CorrelationTable& table);
Json to_json(const KolmogorovVerdict& verdict);
CorrelationTable table_from_json(const Json& j);

enum class TriangleClass { kFlat, kDeficit, kExcess };
std::string to_string(TriangleClass c);

/// Compares the angle sum with flat_sum; each angle must lie in (0, flat_sum).
TriangleClass triangle_angle_test(std::array<double, 3> angles, double flat_sum = std::numbers::pi,
                                  double tolerance = 1e-9);

}  // namespace pcsft
