#include "ibcsim/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "ibcsim/errors.hpp"

namespace ibc {

double chi_square_sf(double x, double dof) {
  if (!(dof > 0.0)) return 1.0;
  if (x <= 0.0) return 1.0;
  boost::math::chi_squared_distribution<double> dist(dof);
  return boost::math::cdf(boost::math::complement(dist, x));
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;  // series converges slowly; Q is 1 to double precision here
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw DegenerateInputError("KS test needs at least one sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)};
}

ChiSquareResult two_sample_chi_square(const std::vector<double>& a, const std::vector<double>& b,
                                      double min_combined) {
  if (a.size() != b.size()) throw ShapeError("chi-square: category counts differ in length");
  // merge adjacent categories until each combined count reaches the floor
  std::vector<double> ma, mb;
  double ca = 0.0, cb = 0.0;
  int merges = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i];
    cb += b[i];
    if (ca + cb >= min_combined) {
      ma.push_back(ca);
      mb.push_back(cb);
      ca = cb = 0.0;
    } else {
      ++merges;
    }
  }
  if (ca + cb > 0.0) {
    if (ma.empty()) {
      ma.push_back(ca);
      mb.push_back(cb);
    } else {
      ma.back() += ca;
      mb.back() += cb;
    }
  }
  ChiSquareResult r;
  r.merged_bins = merges;
  const double na = std::accumulate(ma.begin(), ma.end(), 0.0);
  const double nb = std::accumulate(mb.begin(), mb.end(), 0.0);
  if (ma.size() < 2 || na <= 0.0 || nb <= 0.0) return r;
  const double ka = std::sqrt(nb / na);
  const double kb = std::sqrt(na / nb);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double tot = ma[i] + mb[i];
    if (tot <= 0.0) continue;
    const double diff = ka * ma[i] - kb * mb[i];
    r.statistic += diff * diff / tot;
  }
  r.dof = static_cast<int>(ma.size()) - 1;
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ShapeError("log-log fit needs matched arrays of length >= 2");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace ibc
