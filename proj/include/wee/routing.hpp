#pragma once

#include <vector>

#include "wee/diff.hpp"
#include "wee/encoders.hpp"

namespace wee {

// hard_st: forward uses the one-hot KeepTop1 selection, backward the soft
//          weights (straight-through).
// soft:    the soft distribution is used in the value path as well.
enum class RoutingMode { hard_st, soft };

RoutingMode routing_mode_from_name(const std::string& name);
const char* routing_mode_name(RoutingMode mode);

struct RouterParams {
  DiffArray w_indep;  // length M
  DiffArray w_dep;    // d_base x M
};

struct RoutingDecision {
  DiffArray soft;            // differentiable distribution over the pool
  std::vector<double> hard;  // KeepTop1(soft)
  int chosen_index = 0;      // argmax, ties to the lowest index
};

// One-hot at the argmax; ties break toward the lowest index. Input must be a
// valid probability vector.
std::vector<double> keep_top1(const std::vector<double>& p);

// Sample-independent route: softmax(w_indep).
RoutingDecision route_indep(const RouterParams& params);

// Sample-dependent route: softmax(MeanPool(z_base) * W_dep).
RoutingDecision route_dep(const DiffArray& z_base, const RouterParams& params);

// Weighted sum over the expert pool. Under hard_st the forward value is
// exactly the chosen expert's map while gradients follow the soft weights;
// under soft mode value and gradient both use the soft weights.
DiffArray mix_experts(const RoutingDecision& decision, const std::vector<DiffArray>& experts,
                      RoutingMode mode);

// [base, dep, indep] feature concatenation; never changes the time length.
DiffArray fuse(const DiffArray& z_base, const DiffArray& z_dep, const DiffArray& z_indep);

// Downsampling adapter (frame stacking, linear, GELU) followed by the linear
// projection into the decoder embedding space.
struct AdapterParams {
  DiffArray adapter_w;  // d_adapter x (k * d_fused)
  DiffArray adapter_b;  // d_adapter
  DiffArray proj_w;     // d_llm x d_adapter
  DiffArray proj_b;     // d_llm
};

DiffArray adapt_project(const DiffArray& z, int stack_factor, const AdapterParams& params);

DiffArray from_feature_map(const FeatureMap& z);

}  // namespace wee
