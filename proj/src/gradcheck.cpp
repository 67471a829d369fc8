#include "anatgraph/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace anatgraph {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult check_gradients(const std::function<Tensor()>& loss, std::vector<Tensor> inputs,
                                const GradCheckOptions& options) {
  return check_gradients(loss, inputs, {NumericTerm{loss, std::vector<double>(inputs.size(), 1.0)}}, options);
}

GradCheckResult check_gradients(const std::function<Tensor()>& analytic_loss, std::vector<Tensor> inputs,
                                const std::vector<NumericTerm>& terms, const GradCheckOptions& options) {
  for (const auto& term : terms)
    if (term.input_scale.size() != inputs.size())
      throw DimensionError("check_gradients: each numeric term needs one scale per input");
  for (auto& t : inputs) {
    if (!t.requires_grad()) throw AutodiffError("check_gradients: input does not require grad");
    t.clear_grad();
  }
  analytic_loss().backward();
  std::vector<Vector> analytic;
  for (const auto& t : inputs) analytic.push_back(t.has_grad() ? t.grad() : Vector::Zero(t.size()));

  const auto eval = [](const std::function<Tensor()>& f) {
    NoGradGuard guard;
    return f().item();
  };
  std::vector<double> f0;
  for (const auto& term : terms) f0.push_back(eval(term.loss));
  const double h = options.step;
  Rng rng(options.seed);
  GradCheckResult result;

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Vector& x = inputs[k].mutable_data();
    std::vector<Index> coords(static_cast<std::size_t>(x.size()));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (options.max_coordinates > 0 && x.size() > options.max_coordinates) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(options.max_coordinates));
    }
    for (Index i : coords) {
      double numeric = 0.0;
      bool kink = false;
      const double saved = x[i];
      for (std::size_t j = 0; j < terms.size(); ++j) {
        const double scale = terms[j].input_scale[k];
        if (scale == 0.0) continue;
        const auto probe = [&](double step) {
          x[i] = saved + step;
          const double fp = eval(terms[j].loss);
          x[i] = saved - step;
          const double fm = eval(terms[j].loss);
          x[i] = saved;
          return std::pair{fp, fm};
        };
        const auto [fp, fm] = probe(h);
        const auto [fp2, fm2] = probe(h / 2);
        const double central = (fp - fm) / (2.0 * h);
        const double central2 = (fp2 - fm2) / h;
        // Smooth: the second difference shrinks 4x with the step and the two
        // central differences agree to O(h^2). A kink inside [-h, h] breaks at
        // least one of these by a fraction of its derivative jump.
        const double curvature = std::abs((fp + fm - 2.0 * f0[j]) - 4.0 * (fp2 + fm2 - 2.0 * f0[j])) / h;
        const double indicator = std::abs(scale) * std::max(curvature, std::abs(central - central2));
        kink = kink || indicator > options.kink_tolerance * std::max(std::abs(central), 1e-3);
        numeric += scale * central;
      }
      if (kink) {
        ++result.skipped_nonsmooth;
        continue;
      }
      const double a = analytic[k][i];
      result.max_absolute_error = std::max(result.max_absolute_error, std::abs(a - numeric));
      result.max_relative_error = std::max(result.max_relative_error, relative_error(a, numeric));
      ++result.checked;
    }
  }
  return result;
}

}  // namespace anatgraph
