#pragma once

#include <optional>
#include <string>
#include <vector>

namespace anatgraph {

/// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value of Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

/// Sample Pearson coefficient; nullopt when either series is constant.
std::optional<double> pearson_r(const std::vector<double>& x, const std::vector<double>& y);

struct PearsonResult {
  std::optional<double> r;
  std::optional<double> p;
  std::size_t n = 0;
  bool defined() const { return r.has_value(); }
};

/// r with its two-sided p-value, t = r sqrt((n-2)/(1-r^2)), n-2 dof.
PearsonResult pearson_test(const std::vector<double>& x, const std::vector<double>& y);

/// Prefix end points step, 2 step, ..., plus n itself; prefixes shorter than
/// 3 are dropped.
std::vector<std::size_t> prefix_ends(std::size_t n, std::size_t step);

double mean_of(const std::vector<double>& v);
/// Population standard deviation.
double population_std(const std::vector<double>& v);

}  // namespace anatgraph
