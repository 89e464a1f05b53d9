#pragma once

#include <functional>
#include <vector>

namespace ibc {

/// Upper tail P(X > x) of the chi-square law with `dof` degrees of freedom.
double chi_square_sf(double x, double dof);

/// Kolmogorov limiting tail Q(lambda) = 2 sum_k (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF, with the
/// Stephens small-sample correction (sqrt(n) + 0.12 + 0.11/sqrt(n)) D.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  int merged_bins = 0;
};

/// Two-sample chi-square homogeneity test on matched category counts. Adjacent
/// categories are merged until every combined count reaches `min_combined`.
ChiSquareResult two_sample_chi_square(const std::vector<double>& a, const std::vector<double>& b,
                                      double min_combined = 10.0);

/// Least-squares slope of log|y| against log x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ibc
