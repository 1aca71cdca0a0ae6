#include "wee/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "wee/rng.hpp"

namespace wee {

std::vector<GradReport> grad_check(ParamStore& params,
                                   const std::function<DiffArray()>& closure, double step,
                                   int max_entries_per_param, std::uint64_t seed) {
  if (!(step > 0.0 && step <= 1e-2)) {
    throw ConfigError("grad_check: step must be in (0, 1e-2]");
  }
  if (max_entries_per_param < 32) max_entries_per_param = 32;

  const double f0 = closure().scalar();
  const double f0_again = closure().scalar();
  if (std::memcmp(&f0, &f0_again, sizeof(double)) != 0) {
    throw DeterminismError("grad_check: closure is not deterministic");
  }

  params.zero_grads();
  DiffArray loss = closure();
  loss.backward();

  std::vector<GradReport> reports;
  for (const std::string& name : params.trainable_names()) {
    DiffArray p = params.get(name);
    const std::size_t n = p.size();

    std::vector<double> analytic(n, 0.0);
    if (p.has_grad()) analytic = p.grad();

    std::vector<std::size_t> idx;
    if (n <= static_cast<std::size_t>(max_entries_per_param)) {
      idx.resize(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    } else {
      Rng rng(hash_seed(seed, std::hash<std::string>{}(name)));
      std::unordered_set<std::size_t> seen;
      while (seen.size() < static_cast<std::size_t>(max_entries_per_param)) {
        seen.insert(static_cast<std::size_t>(rng.below(n)));
      }
      idx.assign(seen.begin(), seen.end());
      std::sort(idx.begin(), idx.end());
    }

    GradReport rep;
    rep.parameter_name = name;
    rep.num_entries_checked = static_cast<int>(idx.size());
    for (std::size_t i : idx) {
      double& slot = p.values_mut()[i];
      const double saved = slot;
      slot = saved + step;
      const double fp = closure().scalar();
      slot = saved - step;
      const double fm = closure().scalar();
      slot = saved;
      const double numeric = (fp - fm) / (2.0 * step);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      rep.max_rel_error = std::max(rep.max_rel_error, rel);
      rep.max_abs_error = std::max(rep.max_abs_error, std::abs(a - numeric));
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

double max_rel_error(const std::vector<GradReport>& reports) {
  double m = 0.0;
  for (const auto& r : reports) m = std::max(m, r.max_rel_error);
  return m;
}

}  // namespace wee
