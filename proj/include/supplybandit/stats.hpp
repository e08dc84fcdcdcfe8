#pragma once

#include <cstddef>
#include <span>

namespace supplybandit {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double std_dev = 0.0;    // sample (n - 1) standard deviation
  double std_error = 0.0;  // std_dev / sqrt(n)
};

Summary summarize(std::span<const double> values);

struct TTest {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// One-sided paired t-test of H1: mean(a - b) > 0.
TTest paired_t_test_greater(std::span<const double> a, std::span<const double> b);

/// One-sided one-sample t-test of H1: mean(values) > mu.
TTest one_sample_t_test_greater(std::span<const double> values, double mu);

}  // namespace supplybandit
