#pragma once

#include <map>
#include <string>
#include <vector>

#include "wee/params.hpp"

namespace wee {

// Adaptive moment estimation with decoupled weight decay. Learning rates can
// be overridden per name prefix (longest matching prefix wins).
class AdamW {
 public:
  double lr = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  void set_lr_prefix(const std::string& prefix, double value) { lr_prefixes_[prefix] = value; }

  void step(ParamStore& params);

 private:
  double lr_for(const std::string& name) const;

  struct State {
    std::vector<double> m;
    std::vector<double> v;
  };
  std::map<std::string, State> state_;
  std::map<std::string, double> lr_prefixes_;
  long t_ = 0;
};

}  // namespace wee
