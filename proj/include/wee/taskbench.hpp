#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wee/audio.hpp"

namespace wee {

enum class Task { ER, CTC, CMD, DS };

constexpr int kNumTasks = 4;
const char* task_name(Task task);
Task task_from_name(const std::string& name);
int task_index(Task task);
// Single-token instruction for the task.
int task_instruction_token(Task task);
int num_classes(Task task);

// Class label <-> target token mapping. Returns -1 for tokens that do not
// decode to a class of the task (malformed generations).
int class_token(Task task, int label);
int label_from_token(Task task, int token);

struct GenerationParams {
  int sample_rate_hz = 1000;
  double duration_s = 1.0;
  double noise_sigma = 0.1;
  // Per-segment amplitude gain, uniform in [gain_lo, gain_hi]. The spread is
  // wide enough that raw loudness statistics do not identify any class.
  double gain_lo = 0.6;
  double gain_hi = 1.2;
};

struct TaskExample {
  Task task = Task::ER;
  AudioSegment audio;
  std::vector<int> instruction_ids;
  std::vector<int> target_ids;  // label tokens followed by EOS
  int label = 0;                // class index (ER/CTC) or risk flag (CMD)
  std::vector<int> symbols;     // DS chirp symbol indices
};

struct Dataset {
  Task task = Task::ER;
  std::string split = "train";
  std::uint64_t seed = 0;
  GenerationParams params;
  std::vector<TaskExample> examples;
};

// Planted-signal generator at params.sample_rate_hz / params.duration_s with
// additive Gaussian noise. Per-example seeds are derived by hashing, so
// generation is order-independent and bit-reproducible.
Dataset gen_task(Task task, int n, std::uint64_t seed, const GenerationParams& params = {},
                 const std::string& split = "train");

// ---- metrics ----

// Unweighted mean over classes of F1 = 2PR/(P+R); a class with P+R = 0
// contributes 0. Predictions may be -1 (an "invalid" class that never
// matches); labels must lie in [0, nclasses).
double macro_f1(const std::vector<int>& preds, const std::vector<int>& labels, int nclasses);

// Fraction of positives among the k highest-scoring items; score ties break
// toward the lower item index.
double precision_at_k(const std::vector<double>& scores, const std::vector<int>& labels, int k);

// LCS-based F-score with beta = 1; 0 when the LCS is empty.
double rouge_l(const std::vector<int>& candidate, const std::vector<int>& reference);

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

// ---- dataset files ----
// JSON-lines: a header record {format_version, seed, generation_params, task,
// split} followed by one record per example; floats carry 9 significant
// digits.
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

}  // namespace wee
