#pragma once

#include <vector>

#include "wee/decoder.hpp"
#include "wee/diff.hpp"

namespace wee {

struct LossBreakdown {
  double next_token = 0.0;
  double indep_ent = 0.0;
  double dep_ent = 0.0;
  double dep_div = 0.0;
  double wee = 0.0;
  double total = 0.0;
  double lambda = 0.1;
};

// Mean cross-entropy over positions whose next token has the target role.
// Position p is scored against ids[p+1] whenever roles[p+1] == target.
DiffArray next_token_loss(const DiffArray& logits, const TokenSequence& seq);

// Entropy of the sample-independent router's soft distribution.
DiffArray indep_entropy_loss(const DiffArray& soft_indep);

// Batch mean of per-sample entropies of the soft dependent-routing rows.
DiffArray dep_entropy_loss(const std::vector<DiffArray>& soft_dep_rows);

// sum_k rbar[k] * ln rbar[k] over the batch-mean routing distribution: the
// negative entropy of the mean, minimized at -ln M by balanced usage.
DiffArray dep_diversity_loss(const std::vector<DiffArray>& soft_dep_rows);

// Batch mean of the soft rows (rbar).
DiffArray mean_routing(const std::vector<DiffArray>& soft_dep_rows);

struct TotalLoss {
  DiffArray total;
  LossBreakdown breakdown;
};

// total = next + lambda * wee, wee = 0.5 * (indep_ent + (dep_ent + dep_div)).
TotalLoss total_loss(const DiffArray& next, const DiffArray& indep_ent, const DiffArray& dep_ent,
                     const DiffArray& dep_div, double lambda);

}  // namespace wee
