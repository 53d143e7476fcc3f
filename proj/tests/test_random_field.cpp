#include "doctest.h"

#include <cmath>
#include <sstream>

#include "pcsft/error.hpp"
#include "pcsft/parallel.hpp"
#include "pcsft/random_field.hpp"
#include "pcsft/random_matrices.hpp"

using namespace pcsft;
using namespace std::complex_literals;

namespace {

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

CMatrix mat2(Complex a, Complex b, Complex c, Complex d) {
  CMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("ensemble constructors") {
  const double r = 1 / std::sqrt(2.0);
  CHECK(max_abs(ensemble_from_pure_state(FieldVector{1.0, 0.0}, BackgroundField(0.0)).covariance().matrix() -
                mat2(1, 0, 0, 0)) < 1e-15);
  CHECK(max_abs(ensemble_from_pure_state(FieldVector{1.0, 0.0}, BackgroundField(0.1)).covariance().matrix() -
                mat2(1.1, 0, 0, 0.1)) < 1e-15);
  CHECK(max_abs(ensemble_from_pure_state(FieldVector{r, r}, BackgroundField(0.0)).covariance().matrix() -
                mat2(0.5, 0.5, 0.5, 0.5)) < 1e-15);
  const auto mixed = DensityOperator::maximally_mixed(2);
  CHECK(max_abs(ensemble_from_density(mixed, BackgroundField(0.0)).covariance().matrix() - mat2(0.5, 0, 0, 0.5)) <
        1e-15);
  CHECK(max_abs(ensemble_from_density(mixed, BackgroundField(0.25)).covariance().matrix() -
                mat2(0.75, 0, 0, 0.75)) < 1e-15);
  const DensityOperator rho(HermitianOperator::diagonal({0.9, 0.1}));
  CHECK(max_abs(ensemble_from_density(rho, BackgroundField(0.0)).covariance().matrix() - mat2(0.9, 0, 0, 0.1)) <
        1e-15);
  CHECK_THROWS_WITH_AS(BackgroundField(-0.1), "epsilon must be non-negative", DomainError);
  CHECK_THROWS_AS(GaussianFieldEnsemble(HermitianOperator::diagonal({1.0, -0.01})), DomainError);
  // Tiny negative eigenvalues are clipped.
  CHECK_NOTHROW(GaussianFieldEnsemble(HermitianOperator::diagonal({1.0, -1e-12})));
}

TEST_CASE("sampler factor reproduces the covariance") {
  CounterRng rng(RandomSeed{2}, 0);
  for (std::size_t n = 2; n <= 8; ++n) {
    const auto ens = ensemble_from_density(random_density(n, rng), BackgroundField(0.05));
    const CMatrix& s = ens.sampler_factor();
    CHECK(max_abs(s * s.adjoint() - ens.covariance().matrix()) < 1e-12);
  }
}

TEST_CASE("zero covariance gives zero samples") {
  const GaussianFieldEnsemble zero(HermitianOperator::zero(3));
  for (const auto& phi : sample(zero, 100, RandomSeed{1})) CHECK(phi.squared_norm() == 0.0);
  for (const auto& phi : time_series(zero, 10, RandomSeed{1})) CHECK(phi.squared_norm() == 0.0);
  CHECK(time_averaged_power(zero, 1000, RandomSeed{1}) == 0.0);
}

TEST_CASE("unit variance in one dimension") {
  const GaussianFieldEnsemble ens(HermitianOperator::identity(1));
  const auto xs = sample(ens, 1000000, RandomSeed{9});
  double s = 0;
  for (const auto& x : xs) s += power(x);
  CHECK(std::abs(s / 1e6 - 1.0) <= 0.005);
}

TEST_CASE("empirical covariance examples") {
  std::vector<FieldVector> two{FieldVector{1.0, 0.0}, FieldVector{-1.0, 0.0}};
  CHECK(max_abs(empirical_covariance(two).matrix() - mat2(1, 0, 0, 0)) == 0.0);
  std::vector<FieldVector> same(5, FieldVector{0.0, 2.0});
  CHECK(max_abs(empirical_covariance(same).matrix() - mat2(0, 0, 0, 4)) == 0.0);

  const auto half = ensemble_from_density(DensityOperator::maximally_mixed(2), BackgroundField(0.0));
  const auto xs = sample(half, 100000, RandomSeed{4});
  CHECK(max_abs(empirical_covariance(xs).matrix() - mat2(0.5, 0, 0, 0.5)) <= 0.02);
  CHECK_THROWS_AS(empirical_covariance(std::vector<FieldVector>{FieldVector{1.0}}), DomainError);
}

TEST_CASE("covariance consistency and circularity on random ensembles") {
  CounterRng rng(RandomSeed{21}, 0);
  const std::size_t n_samples = 40000;
  const double sqrt_n = std::sqrt(static_cast<double>(n_samples));
  for (std::size_t dim = 2; dim <= 8; ++dim) {
    for (int rep = 0; rep < 3; ++rep) {
      const auto ens = ensemble_from_density(random_density(dim, rng), BackgroundField(0.1));
      const auto xs = sample(ens, n_samples, RandomSeed{100 + dim * 3 + static_cast<std::uint64_t>(rep)});
      const double dmax = max_abs(ens.covariance().matrix());
      CHECK(max_abs(empirical_covariance(xs).matrix() - ens.covariance().matrix()) <= 5 * dmax / sqrt_n);
      // E[phi phi^T] vanishes; entries have standard deviation at most max(D)/sqrt(N).
      CHECK(max_abs(empirical_pseudo_covariance(xs)) <= 5 * dmax / sqrt_n);
    }
  }
}

TEST_CASE("pure-state samples stay on the state's ray") {
  CounterRng rng(RandomSeed{22}, 0);
  for (std::size_t dim = 2; dim <= 6; ++dim) {
    const auto psi = random_state(dim, rng);
    const auto ens = ensemble_from_pure_state(psi, BackgroundField(0.0));
    for (const auto& phi : sample(ens, 200, RandomSeed{dim})) {
      const Complex c = inner(phi, psi);
      const CVector residual = phi.components() - c * psi.components();
      CHECK(residual.norm() <= 1e-12);
    }
  }
}

TEST_CASE("dispersion and power") {
  CHECK(power(FieldVector::zero(2)) == 0.0);
  CHECK(power(FieldVector{1.0, 1i}) == doctest::Approx(2.0));
  CounterRng rng(RandomSeed{23}, 0);
  for (std::size_t n = 2; n <= 6; ++n) {
    const auto ens = ensemble_from_density(random_density(n, rng), BackgroundField(0.3));
    CHECK(std::abs(dispersion(ens) - (1.0 + 0.3 * static_cast<double>(n))) < 1e-12);
  }
}

TEST_CASE("time series") {
  const GaussianFieldEnsemble ens(HermitianOperator::identity(2));
  const auto one = time_series(ens, 1, RandomSeed{3});
  const auto s = sample(ens, 1, RandomSeed{3});
  CHECK(one[0].components() == s[0].components());
  CHECK(std::abs(time_averaged_power(ens, 1000000, RandomSeed{8}) - 2.0) <= 0.02);
}

TEST_CASE("sampling is deterministic across worker counts") {
  CounterRng rng(RandomSeed{24}, 0);
  const auto ens = ensemble_from_density(random_density(3, rng), BackgroundField(0.1));
  set_worker_count(1);
  const auto a = sample(ens, 20000, RandomSeed{77});
  const double pa = time_averaged_power(ens, 20000, RandomSeed{77});
  set_worker_count(4);
  const auto b = sample(ens, 20000, RandomSeed{77});
  const double pb = time_averaged_power(ens, 20000, RandomSeed{77});
  set_worker_count(0);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i].components() == b[i].components());
  CHECK(pa == pb);
  // Offsets address the same streams.
  const auto tail = sample(ens, 10, RandomSeed{77}, 500);
  for (std::size_t i = 0; i < 10; ++i) CHECK(tail[i].components() == a[500 + i].components());
}

TEST_CASE("csv and json round trips") {
  CounterRng rng(RandomSeed{25}, 0);
  const auto ens = ensemble_from_density(random_density(3, rng), BackgroundField(0.2));
  const auto xs = sample(ens, 50, RandomSeed{1});
  std::stringstream ss;
  write_samples_csv(ss, xs);
  CHECK(ss.str().substr(0, 24) == "re0,im0,re1,im1,re2,im2\r");
  const auto back = read_samples_csv(ss);
  REQUIRE(back.size() == xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(back[i].components() == xs[i].components());

  const auto round = ensemble_from_json(to_json(ens));
  CHECK(round.covariance().matrix() == ens.covariance().matrix());
  CHECK(round.background_epsilon() == 0.2);
}
