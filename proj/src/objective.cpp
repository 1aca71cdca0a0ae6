#include "wee/objective.hpp"

namespace wee {

DiffArray next_token_loss(const DiffArray& logits, const TokenSequence& seq) {
  if (seq.ids.size() != seq.roles.size()) {
    throw ShapeError("next_token_loss: ids/roles length mismatch");
  }
  if (logits.ndim() != 2 || logits.dim(0) != static_cast<int>(seq.ids.size())) {
    throw ShapeError("next_token_loss: logits rows must match sequence length");
  }
  std::vector<int> rows;
  std::vector<int> labels;
  for (std::size_t p = 1; p < seq.ids.size(); ++p) {
    if (seq.roles[p] == Role::target) {
      rows.push_back(static_cast<int>(p - 1));
      labels.push_back(seq.ids[p]);
    }
  }
  if (rows.empty()) throw InvalidInputError("next_token_loss: no target positions");
  return picked_nll_mean(logits, rows, labels);
}

DiffArray indep_entropy_loss(const DiffArray& soft_indep) { return entropy_op(soft_indep); }

DiffArray dep_entropy_loss(const std::vector<DiffArray>& soft_dep_rows) {
  if (soft_dep_rows.empty()) throw InvalidInputError("dep_entropy_loss: empty batch");
  std::vector<DiffArray> entropies;
  entropies.reserve(soft_dep_rows.size());
  for (const DiffArray& row : soft_dep_rows) entropies.push_back(entropy_op(row));
  return mean_scalars(entropies);
}

DiffArray mean_routing(const std::vector<DiffArray>& soft_dep_rows) {
  if (soft_dep_rows.empty()) throw InvalidInputError("mean_routing: empty batch");
  DiffArray acc = soft_dep_rows[0];
  for (std::size_t i = 1; i < soft_dep_rows.size(); ++i) acc = add(acc, soft_dep_rows[i]);
  return mul_scalar(acc, 1.0 / static_cast<double>(soft_dep_rows.size()));
}

DiffArray dep_diversity_loss(const std::vector<DiffArray>& soft_dep_rows) {
  return neg(entropy_op(mean_routing(soft_dep_rows)));
}

TotalLoss total_loss(const DiffArray& next, const DiffArray& indep_ent, const DiffArray& dep_ent,
                     const DiffArray& dep_div, double lambda) {
  DiffArray wee = mul_scalar(add(indep_ent, add(dep_ent, dep_div)), 0.5);
  DiffArray total = add(next, mul_scalar(wee, lambda));
  TotalLoss out;
  out.total = total;
  out.breakdown.next_token = next.scalar();
  out.breakdown.indep_ent = indep_ent.scalar();
  out.breakdown.dep_ent = dep_ent.scalar();
  out.breakdown.dep_div = dep_div.scalar();
  out.breakdown.wee = wee.scalar();
  out.breakdown.total = total.scalar();
  out.breakdown.lambda = lambda;
  return out;
}

}  // namespace wee
