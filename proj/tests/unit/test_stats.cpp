#include <doctest.h>

#include <cmath>

#include "ibcsim/errors.hpp"
#include "ibcsim/stats.hpp"

using namespace ibc;

TEST_CASE("chi-square tail against closed forms and table values") {
  // two degrees of freedom: P(X > x) = exp(-x/2)
  for (double x : {0.1, 1.0, 4.0, 13.0}) CHECK(chi_square_sf(x, 2.0) == doctest::Approx(std::exp(-0.5 * x)).epsilon(1e-12));
  // one degree of freedom: P(X > x) = erfc(sqrt(x/2))
  for (double x : {0.3, 2.0, 9.0}) CHECK(chi_square_sf(x, 1.0) == doctest::Approx(std::erfc(std::sqrt(0.5 * x))).epsilon(1e-10));
  CHECK(chi_square_sf(3.841459, 1.0) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(chi_square_sf(18.307038, 10.0) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(chi_square_sf(0.0, 3.0) == 1.0);
  CHECK(chi_square_sf(5.0, 0.0) == 1.0);
}

TEST_CASE("Kolmogorov tail") {
  CHECK(kolmogorov_sf(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_sf(1.6276) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.963945).epsilon(1e-5));
  CHECK(kolmogorov_sf(0.0) == 1.0);
  CHECK(kolmogorov_sf(0.1) == 1.0);
  CHECK(kolmogorov_sf(5.0) < 1e-20);
}

TEST_CASE("KS statistic, hand evaluation") {
  auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  CHECK(ks_test({0.1, 0.4, 0.7}, uniform).statistic == doctest::Approx(0.3));
  CHECK(ks_test({0.5}, uniform).statistic == doctest::Approx(0.5));
  const auto r = ks_test({0.9, 0.1, 0.4, 0.7}, uniform);
  // sorted 0.1 0.4 0.7 0.9: the largest gap is F(0.7) - 2/4
  CHECK(r.statistic == doctest::Approx(0.2));
  const double lam = (2.0 + 0.12 + 0.11 / 2.0) * 0.2;
  CHECK(r.p_value == doctest::Approx(kolmogorov_sf(lam)));
  CHECK_THROWS_AS(ks_test({}, uniform), DegenerateInputError);
}

TEST_CASE("two-sample chi-square, hand evaluation") {
  const auto r = two_sample_chi_square({10, 20, 30}, {20, 20, 20});
  CHECK(r.statistic == doctest::Approx(100.0 / 30.0 + 100.0 / 50.0));
  CHECK(r.dof == 2);
  CHECK(r.p_value == doctest::Approx(std::exp(-0.5 * r.statistic)));

  // unequal totals: sqrt(nb/na) a - sqrt(na/nb) b over a + b
  const auto u = two_sample_chi_square({10, 30}, {30, 30});
  CHECK(u.statistic == doctest::Approx(150.0 / 40.0 + 150.0 / 60.0));
  CHECK(u.dof == 1);

  const auto same = two_sample_chi_square({5, 15, 25}, {5, 15, 25});
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
}

TEST_CASE("sparse categories are merged") {
  const auto r = two_sample_chi_square({1, 1, 10, 10}, {2, 2, 10, 10});
  CHECK(r.merged_bins == 2);
  CHECK(r.dof == 1);
  // merged: (12, 14) and (10, 10)
  const double ka = std::sqrt(24.0 / 22.0), kb = std::sqrt(22.0 / 24.0);
  const double oracle = std::pow(ka * 12 - kb * 14, 2) / 26.0 + std::pow(ka * 10 - kb * 10, 2) / 20.0;
  CHECK(r.statistic == doctest::Approx(oracle));

  // trailing remainder folds into the last kept category
  const auto t = two_sample_chi_square({10, 10, 1}, {10, 10, 2});
  CHECK(t.dof == 1);
  CHECK(t.merged_bins == 1);

  const auto tiny = two_sample_chi_square({1, 1}, {1, 1});
  CHECK(tiny.dof == 0);
  CHECK(tiny.p_value == 1.0);
  CHECK_THROWS_AS(two_sample_chi_square({1, 2}, {1}), ShapeError);
}

TEST_CASE("log-log slope") {
  CHECK(log_log_slope({1, 2, 4, 8}, {3, 12, 48, 192}) == doctest::Approx(2.0));
  CHECK(log_log_slope({0.1, 0.05, 0.025}, {-0.2, -0.1, -0.05}) == doctest::Approx(1.0));
  CHECK(log_log_slope({0.1, 0.05}, {10, 20}) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(log_log_slope({1.0}, {1.0}), ShapeError);
  CHECK_THROWS_AS(log_log_slope({1.0, 2.0}, {1.0}), ShapeError);
}
