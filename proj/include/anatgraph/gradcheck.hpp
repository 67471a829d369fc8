#pragma once

#include <functional>
#include <string>
#include <vector>

#include "anatgraph/layers.hpp"

namespace anatgraph {

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates checked per input; <= 0 checks every coordinate.
  Index max_coordinates = 0;
  /// A coordinate is skipped as non-smooth (ReLU, max-pool tie inside the
  /// step) when second differences at h and h/2 are inconsistent with a
  /// smooth function by more than this fraction of max(|gradient|, 1e-3).
  double kink_tolerance = 1e-5;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  Index checked = 0;
  Index skipped_nonsmooth = 0;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-3).
double relative_error(double analytic, double numeric);

/// A scalar function whose finite-difference gradient contributes
/// input_scale[k] times to the expected gradient of input k.
struct NumericTerm {
  std::function<Tensor()> loss;
  std::vector<double> input_scale;
};

/// Expected gradient = sum over terms of scale * central difference. Used
/// where the analytic gradient is deliberately not the derivative of the
/// forward value (gradient reversal, detached branches).
GradCheckResult check_gradients(const std::function<Tensor()>& analytic_loss, std::vector<Tensor> inputs,
                                const std::vector<NumericTerm>& numeric_terms,
                                const GradCheckOptions& options = {});

/// Compares reverse-mode gradients of the scalar `loss` w.r.t. each input
/// against central finite differences. `loss` must be a deterministic
/// function of the inputs' current values.
GradCheckResult check_gradients(const std::function<Tensor()>& loss, std::vector<Tensor> inputs,
                                const GradCheckOptions& options = {});

struct GradCheckCase {
  std::string name;
  GradCheckResult result;
  double seconds = 0.0;
};

/// The built-in suite: every differentiable op plus the composed model, each
/// over `trials` seeded random draws.
std::vector<GradCheckCase> run_gradcheck_suite(int trials, std::uint64_t seed);

}  // namespace anatgraph
