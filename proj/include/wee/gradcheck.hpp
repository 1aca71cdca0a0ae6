#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wee/params.hpp"

namespace wee {

struct GradReport {
  std::string parameter_name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  int num_entries_checked = 0;
};

// Compares reverse-mode gradients of a scalar-valued closure against central
// finite differences, parameter by parameter. For parameters larger than
// `max_entries_per_param` a seeded random subsample of entries is checked.
// Relative error uses denominator max(|analytic|, |numeric|, 1e-8).
//
// The closure must be deterministic; two evaluations at the unperturbed point
// are compared bitwise and a mismatch raises DeterminismError.
std::vector<GradReport> grad_check(ParamStore& params,
                                   const std::function<DiffArray()>& closure,
                                   double step = 1e-5, int max_entries_per_param = 32,
                                   std::uint64_t seed = 0);

double max_rel_error(const std::vector<GradReport>& reports);

}  // namespace wee
