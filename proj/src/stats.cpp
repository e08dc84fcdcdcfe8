#include "supplybandit/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace supplybandit {

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_dev = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.std_error = s.std_dev / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

TTest one_sample_t_test_greater(std::span<const double> values, double mu) {
  if (values.size() < 2) throw std::invalid_argument("t-test needs at least two observations");
  const Summary s = summarize(values);
  TTest out;
  out.dof = static_cast<double>(s.n - 1);
  if (s.std_error == 0.0) {
    out.statistic = s.mean > mu ? std::numeric_limits<double>::infinity()
                                : (s.mean < mu ? -std::numeric_limits<double>::infinity() : 0.0);
    out.p_value = s.mean > mu ? 0.0 : (s.mean < mu ? 1.0 : 0.5);
    return out;
  }
  out.statistic = (s.mean - mu) / s.std_error;
  const boost::math::students_t dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

TTest paired_t_test_greater(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired t-test needs equal-length samples");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  return one_sample_t_test_greater(diff, 0.0);
}

}  // namespace supplybandit
