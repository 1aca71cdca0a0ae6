#include "wee/routing.hpp"

#include <cmath>

namespace wee {

RoutingMode routing_mode_from_name(const std::string& name) {
  if (name == "hard_st") return RoutingMode::hard_st;
  if (name == "soft") return RoutingMode::soft;
  throw ConfigError("unknown routing_mode: " + name);
}

const char* routing_mode_name(RoutingMode mode) {
  return mode == RoutingMode::hard_st ? "hard_st" : "soft";
}

std::vector<double> keep_top1(const std::vector<double>& p) {
  if (p.empty()) throw DistributionError("keep_top1: empty vector");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw DistributionError("keep_top1: negative or NaN entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DistributionError("keep_top1: probabilities sum to " + std::to_string(sum));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  std::vector<double> out(p.size(), 0.0);
  out[best] = 1.0;
  return out;
}

namespace {

RoutingDecision decision_from_soft(DiffArray soft) {
  RoutingDecision d;
  d.hard = keep_top1(soft.values());
  d.chosen_index = 0;
  for (std::size_t i = 0; i < d.hard.size(); ++i) {
    if (d.hard[i] == 1.0) d.chosen_index = static_cast<int>(i);
  }
  d.soft = std::move(soft);
  return d;
}

}  // namespace

RoutingDecision route_indep(const RouterParams& params) {
  if (params.w_indep.ndim() != 1) throw ShapeError("route_indep: w_indep must be a vector");
  return decision_from_soft(softmax(params.w_indep));
}

RoutingDecision route_dep(const DiffArray& z_base, const RouterParams& params) {
  if (params.w_dep.ndim() != 2) throw ShapeError("route_dep: W_dep must be d_base x M");
  if (z_base.ndim() != 2 || z_base.dim(1) != params.w_dep.dim(0)) {
    throw ShapeError("route_dep: z_base " + shape_str(z_base.shape()) + " vs W_dep " +
                     shape_str(params.w_dep.shape()));
  }
  const int m = params.w_dep.dim(1);
  DiffArray pooled = reshape(mean_pool_time(z_base), {1, z_base.dim(1)});
  DiffArray logits = matmul(pooled, params.w_dep);
  return decision_from_soft(reshape(softmax(logits), {m}));
}

DiffArray mix_experts(const RoutingDecision& decision, const std::vector<DiffArray>& experts,
                      RoutingMode mode) {
  const std::vector<double>& fw =
      mode == RoutingMode::hard_st ? decision.hard : decision.soft.values();
  return weighted_sum_st(decision.soft, fw, experts);
}

DiffArray fuse(const DiffArray& z_base, const DiffArray& z_dep, const DiffArray& z_indep) {
  const int t = z_base.dim(0);
  DiffArray out = concat_features({z_base, z_dep, z_indep});
  if (out.dim(0) != t) throw ShapeError("fuse: time length changed");  // unreachable by construction
  return out;
}

DiffArray adapt_project(const DiffArray& z, int stack_factor, const AdapterParams& params) {
  if (stack_factor <= 0) throw ConfigError("adapt_project: stack factor must be >= 1");
  DiffArray stacked = stack_frames(z, stack_factor);
  DiffArray hidden = gelu(add_rowvec(matmul_nt(stacked, params.adapter_w), params.adapter_b));
  return add_rowvec(matmul_nt(hidden, params.proj_w), params.proj_b);
}

DiffArray from_feature_map(const FeatureMap& z) {
  return DiffArray::constant({z.frames, z.dim}, z.values);
}

}  // namespace wee
