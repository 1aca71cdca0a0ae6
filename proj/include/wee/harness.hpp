#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "wee/decoder.hpp"
#include "wee/objective.hpp"
#include "wee/optim.hpp"
#include "wee/routing.hpp"
#include "wee/taskbench.hpp"

namespace wee {

enum class Variant { base_only, weak_only, indep_only, dep_only, full_wee };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);
// {base_only, weak_only, indep_only, dep_only, full_wee}
const std::vector<Variant>& all_variants();

struct RunConfig {
  // model dims
  int d_base = 32;
  int d_w = 16;
  int num_experts = 3;
  int d_llm = 48;
  int stack_factor = 3;
  DecoderConfig decoder;

  std::string routing_mode = "hard_st";
  double lambda = 0.1;
  double diversity_weight = 1.0;

  // optimizer
  double lr_main = 3e-3;
  double lr_lora = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;

  int batch_size = 16;
  int steps = 1500;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::array<double, kNumTasks> task_weights = {1.0, 1.0, 1.0, 1.0};
  std::string variant = "full_wee";

  // data
  GenerationParams gen;
  int train_per_task = 512;
  int test_per_task = 200;
  int frame_len = 50;
  int hop = 25;
  std::uint64_t encoder_seed = 7;  // encoders are fixtures, shared across runs

  double w_indep_prior = 1.0;  // added to the envelope expert's initial score
  bool train_weak_encoders = false;
  std::string weak_only_expert = "spectral_expert";
  int precision_k = 5;

  // paths
  std::string decoder_checkpoint;
  std::string out_dir = "out";
  std::string data_dir;  // when set, datasets are read from files instead of generated

  void validate() const;
  nlohmann::json to_json() const;
  // Rejects unknown keys at every nesting level.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);
};

// A wired model for one run: frozen decoder and encoder projections plus the
// variant's trainable surface (routers, adapter, projection, LoRA).
struct Model {
  RunConfig cfg;
  Variant variant = Variant::full_wee;
  DecoderConfig dcfg;
  std::uint64_t seed = 0;
  ParamStore store;
  EncoderSpec base_spec;
  std::vector<EncoderSpec> expert_specs;  // envelope, spectral, burst
  int weak_only_index = 1;
  int d_fused = 0;

  bool uses_base() const { return variant != Variant::weak_only; }
  bool uses_indep() const {
    return variant == Variant::indep_only || variant == Variant::full_wee;
  }
  bool uses_dep() const { return variant == Variant::dep_only || variant == Variant::full_wee; }
  bool uses_experts() const { return variant != Variant::base_only; }
  RouterParams routers() const;
  AdapterParams adapter() const;
};

Model build_model(const RunConfig& cfg, std::uint64_t seed);
// Trainable names the variant is supposed to expose; train() asserts the
// store matches exactly before the first step.
std::vector<std::string> expected_trainable(const Model& model);

// Frozen encoder features for one example (descriptors kept when the weak
// projections are trainable).
struct EncodedExample {
  const TaskExample* ex = nullptr;
  DiffArray z_base;
  std::vector<DiffArray> experts;
  std::vector<DiffArray> expert_desc;
};

std::vector<EncodedExample> encode_dataset(const Model& model, const Dataset& ds);

struct SampleGraph {
  DiffArray logits;
  TokenSequence seq;
  DiffArray soft_dep;  // defined when the dependent router ran
  int dep_choice = -1;
  int num_audio = 0;
};

// Builds the routing/fusion/decoder graph for one example. `indep` may be
// shared across a batch (the decision is sample-independent). When
// `teacher_force` is set the target tokens are appended for loss computation.
SampleGraph sample_forward(const Model& model, const EncodedExample& enc,
                           const RoutingDecision* indep, bool teacher_force);

struct TrainLogRow {
  int step = 0;
  LossBreakdown loss;
  double usage_entropy = 0.0;  // entropy of this batch's hard dep choices
};

struct TrainOutcome {
  int steps = 0;
  LossBreakdown first;
  LossBreakdown last;
  std::vector<TrainLogRow> log;
};

// Adaptive-moment training over the trainable set only. Audits frozen hashes
// before/after (drift is a hard failure) and aborts on non-finite loss with a
// batch dump.
TrainOutcome train(Model& model, const std::array<Dataset, kNumTasks>& train_sets,
                   std::ostream* train_log_csv = nullptr);

void write_train_log_csv(const std::vector<TrainLogRow>& rows, std::ostream& out);

// ---- evaluation ----

struct Prediction {
  std::vector<int> generated;
  double risk_score = 0.0;  // probability of the RISK token at the first target position
  int dep_choice = -1;
};

using Predictor = std::function<Prediction(const TaskExample&)>;

struct EvalResult {
  std::map<std::string, double> metrics;  // er_f1, ctc_acc, ctc_f1, cmd_p5, ds_rougeL, aggregate
  bool has_dep = false;
  std::array<std::array<double, 3>, kNumTasks> usage{};  // [task][expert] selection rate
  double usage_entropy = 0.0;                            // over pooled dep choices
};

EvalResult evaluate_with(const std::array<Dataset, kNumTasks>& test_sets,
                         const Predictor& predictor, int precision_k);
EvalResult evaluate(const Model& model, const std::array<Dataset, kNumTasks>& test_sets);
// The model as a predictor (greedy generation; risk score from the first
// target position's distribution).
Predictor model_predictor(const Model& model);

// ---- reports / experiment drivers ----

struct ReportRow {
  std::string variant;
  std::string task;    // er/ctc/cmd/ds or "all"
  std::string metric;  // f1/acc/p5/rougeL/aggregate/usage_*/train_loss_*
  std::uint64_t seed = 0;
  double value = 0.0;
};

struct RunReport {
  std::vector<ReportRow> rows;
  nlohmann::json config_echo;
};

std::array<Dataset, kNumTasks> make_datasets(const RunConfig& cfg, std::uint64_t seed,
                                             const std::string& split, int per_task);
// Loads <data_dir>/<task>_<split>.jsonl for every task.
std::array<Dataset, kNumTasks> load_datasets(const std::string& data_dir,
                                             const std::string& split);
std::array<Dataset, kNumTasks> train_datasets(const RunConfig& cfg, std::uint64_t seed);
std::array<Dataset, kNumTasks> test_datasets(const RunConfig& cfg, std::uint64_t seed);

// One train+evaluate run; rows gain the variant/seed labels. Writes
// train_log/checkpoint into cfg.out_dir when write_artifacts is set.
EvalResult run_single(const RunConfig& cfg, std::uint64_t seed, std::vector<ReportRow>* rows,
                      bool write_artifacts, TrainOutcome* outcome = nullptr);

// All five variants x cfg.seeds with shared data/decoder; emits report.csv
// and Table-shaped report.md into cfg.out_dir.
RunReport ablate(const RunConfig& cfg, std::ostream* progress = nullptr);

struct SweepRow {
  double lambda = 0.0;
  bool diversity = true;
  std::uint64_t seed = 0;
  double usage_entropy = 0.0;
  double er_f1 = 0.0;
  double ctc_acc = 0.0;
  double cmd_p5 = 0.0;
  double ds_rougeL = 0.0;
};

// Trains the full model per (lambda, diversity, seed) setting and records
// final dependent-router usage together with the task metrics.
std::vector<SweepRow> sweep_routing(const RunConfig& cfg, const std::vector<double>& lambdas,
                                    const std::vector<bool>& diversity_options,
                                    std::ostream* progress = nullptr);

void write_report_csv(const RunReport& report, const std::string& path);
std::string render_report_md(const RunReport& report);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

double aggregate_score(const EvalResult& r);

}  // namespace wee
