#include "wee/optim.hpp"

#include <cmath>

namespace wee {

double AdamW::lr_for(const std::string& name) const {
  double best = lr;
  std::size_t best_len = 0;
  for (const auto& [prefix, value] : lr_prefixes_) {
    if (name.rfind(prefix, 0) == 0 && prefix.size() >= best_len) {
      best = value;
      best_len = prefix.size();
    }
  }
  return best;
}

void AdamW::step(ParamStore& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (const std::string& name : params.trainable_names()) {
    DiffArray p = params.get(name);
    if (!p.has_grad()) continue;
    const std::vector<double>& g = p.grad();
    State& st = state_[name];
    if (st.m.empty()) {
      st.m.assign(p.size(), 0.0);
      st.v.assign(p.size(), 0.0);
    }
    const double step_lr = lr_for(name);
    std::vector<double>& values = p.values_mut();
    for (std::size_t i = 0; i < values.size(); ++i) {
      st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * g[i];
      st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * g[i] * g[i];
      const double mhat = st.m[i] / bc1;
      const double vhat = st.v[i] / bc2;
      values[i] -= step_lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * values[i]);
    }
  }
}

}  // namespace wee
