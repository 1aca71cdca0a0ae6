#include "wee/taskbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "wee/decoder.hpp"
#include "wee/rng.hpp"

namespace wee {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

// ER amplitude-modulation rates (Hz) per class.
constexpr double kErRates[3] = {2.0, 5.0, 11.0};
constexpr double kErDepth = 0.8;
constexpr double kErCarrierHz = 100.0;
// CTC carrier pool (Hz); the dominant one is at amplitude 1, others at 0.2.
constexpr double kCtcCarriers[4] = {60.0, 90.0, 130.0, 190.0};
// CMD: steady tone with a rare short high-frequency burst.
constexpr double kCmdToneHz = 80.0;
constexpr double kCmdBurstHz = 350.0;
constexpr double kCmdBurstAmp = 0.9;
constexpr double kCmdBurstDur = 0.05;
constexpr double kCmdPositiveRate = 1.0 / 20.0;
// DS: four consecutive 100 ms chirps, start frequencies by symbol.
constexpr double kDsStarts[4] = {70.0, 110.0, 150.0, 190.0};
constexpr double kDsChirpDur = 0.1;
constexpr double kDsSweepHzPerS = 600.0;
}  // namespace

const char* task_name(Task task) {
  switch (task) {
    case Task::ER: return "ER";
    case Task::CTC: return "CTC";
    case Task::CMD: return "CMD";
    case Task::DS: return "DS";
  }
  return "?";
}

Task task_from_name(const std::string& name) {
  if (name == "ER") return Task::ER;
  if (name == "CTC") return Task::CTC;
  if (name == "CMD") return Task::CMD;
  if (name == "DS") return Task::DS;
  throw ConfigError("unknown task: " + name);
}

int task_index(Task task) { return static_cast<int>(task); }

int task_instruction_token(Task task) { return vocab::TASK0 + task_index(task); }

int num_classes(Task task) {
  switch (task) {
    case Task::ER: return 3;
    case Task::CTC: return 4;
    case Task::CMD: return 2;
    case Task::DS: return 4;  // symbol alphabet
  }
  return 0;
}

int class_token(Task task, int label) {
  if (label < 0 || label >= num_classes(task)) {
    throw InvalidInputError("class_token: label out of range");
  }
  switch (task) {
    case Task::ER:
    case Task::CTC: return vocab::CLS0 + label;
    case Task::CMD: return label == 1 ? vocab::RISK : vocab::SAFE;
    case Task::DS: return vocab::SYM0 + label;
  }
  return -1;
}

int label_from_token(Task task, int token) {
  switch (task) {
    case Task::ER:
    case Task::CTC: {
      const int c = token - vocab::CLS0;
      return (c >= 0 && c < num_classes(task)) ? c : -1;
    }
    case Task::CMD:
      if (token == vocab::RISK) return 1;
      if (token == vocab::SAFE) return 0;
      return -1;
    case Task::DS: {
      const int c = token - vocab::SYM0;
      return (c >= 0 && c < 4) ? c : -1;
    }
  }
  return -1;
}

namespace {

TaskExample make_example(Task task, std::uint64_t seed, std::uint64_t index,
                         const GenerationParams& p) {
  Rng rng(hash_seed(seed, index, static_cast<std::uint64_t>(task_index(task))));
  const int n = static_cast<int>(std::llround(p.duration_s * p.sample_rate_hz));
  const double dt = 1.0 / p.sample_rate_hz;
  const double gain = rng.uniform(p.gain_lo, p.gain_hi);

  TaskExample ex;
  ex.task = task;
  ex.audio.sample_rate_hz = p.sample_rate_hz;
  ex.audio.samples.assign(static_cast<std::size_t>(n), 0.0);
  ex.instruction_ids = {task_instruction_token(task)};
  double* x = ex.audio.samples.data();

  switch (task) {
    case Task::ER: {
      ex.label = static_cast<int>(rng.below(3));
      const double fm = kErRates[ex.label];
      const double phase_mod = rng.uniform(0.0, kTwoPi);
      const double phase_car = rng.uniform(0.0, kTwoPi);
      for (int i = 0; i < n; ++i) {
        const double t = i * dt;
        const double env = 1.0 + kErDepth * std::sin(kTwoPi * fm * t + phase_mod);
        x[i] = gain * env * std::sin(kTwoPi * kErCarrierHz * t + phase_car);
      }
      ex.target_ids = {class_token(task, ex.label), vocab::EOS};
      break;
    }
    case Task::CTC: {
      ex.label = static_cast<int>(rng.below(4));
      double phases[4];
      for (double& ph : phases) ph = rng.uniform(0.0, kTwoPi);
      for (int i = 0; i < n; ++i) {
        const double t = i * dt;
        double s = 0.0;
        for (int c = 0; c < 4; ++c) {
          const double amp = c == ex.label ? 1.0 : 0.2;
          s += amp * std::sin(kTwoPi * kCtcCarriers[c] * t + phases[c]);
        }
        x[i] = gain * s;
      }
      ex.target_ids = {class_token(task, ex.label), vocab::EOS};
      break;
    }
    case Task::CMD: {
      ex.label = rng.uniform01() < kCmdPositiveRate ? 1 : 0;
      const double phase_tone = rng.uniform(0.0, kTwoPi);
      const double onset = rng.uniform(0.0, p.duration_s - kCmdBurstDur);
      for (int i = 0; i < n; ++i) {
        const double t = i * dt;
        double s = std::sin(kTwoPi * kCmdToneHz * t + phase_tone);
        if (ex.label == 1 && t >= onset && t < onset + kCmdBurstDur) {
          s += kCmdBurstAmp * std::sin(kTwoPi * kCmdBurstHz * (t - onset));
        }
        x[i] = gain * s;
      }
      ex.target_ids = {class_token(task, ex.label), vocab::EOS};
      break;
    }
    case Task::DS: {
      ex.symbols.resize(4);
      for (int& s : ex.symbols) s = static_cast<int>(rng.below(4));
      const double phase = rng.uniform(0.0, kTwoPi);
      for (int c = 0; c < 4; ++c) {
        const double t0 = c * kDsChirpDur;
        const double f0 = kDsStarts[static_cast<std::size_t>(ex.symbols[c])];
        const int i0 = static_cast<int>(std::llround(t0 * p.sample_rate_hz));
        const int i1 = std::min(
            n, static_cast<int>(std::llround((t0 + kDsChirpDur) * p.sample_rate_hz)));
        for (int i = i0; i < i1; ++i) {
          const double tau = i * dt - t0;
          const double ang = kTwoPi * (f0 * tau + 0.5 * kDsSweepHzPerS * tau * tau) + phase;
          x[i] = gain * std::sin(ang);
        }
      }
      for (int s : ex.symbols) ex.target_ids.push_back(vocab::SYM0 + s);
      ex.target_ids.push_back(vocab::EOS);
      ex.label = ex.symbols[0];
      break;
    }
  }

  for (int i = 0; i < n; ++i) {
    x[i] += p.noise_sigma * rng.normal();
    x[i] = std::clamp(x[i], -4.0, 4.0);
  }
  return ex;
}

}  // namespace

Dataset gen_task(Task task, int n, std::uint64_t seed, const GenerationParams& params,
                 const std::string& split) {
  if (n < 1) throw ConfigError("gen_task: n must be >= 1");
  if (params.sample_rate_hz <= 0 || !(params.duration_s > 0.0)) {
    throw ConfigError("gen_task: invalid sample rate or duration");
  }
  Dataset ds;
  ds.task = task;
  ds.split = split;
  ds.seed = seed;
  ds.params = params;
  ds.examples.resize(static_cast<std::size_t>(n));
  // Per-example seeds make this order-independent.
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    ds.examples[static_cast<std::size_t>(i)] =
        make_example(task, seed, static_cast<std::uint64_t>(i), params);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

double macro_f1(const std::vector<int>& preds, const std::vector<int>& labels, int nclasses) {
  if (preds.size() != labels.size() || preds.empty()) {
    throw InvalidInputError("macro_f1: need equal nonempty prediction/label lists");
  }
  if (nclasses < 1) throw ConfigError("macro_f1: nclasses must be >= 1");
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= nclasses) {
      throw InvalidInputError("macro_f1: label out of range");
    }
    // Negative predictions stand for the "invalid" class and never match.
    if (preds[i] >= nclasses) throw InvalidInputError("macro_f1: prediction out of range");
  }
  double f1_sum = 0.0;
  for (int c = 0; c < nclasses; ++c) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool pc = preds[i] == c;
      const bool lc = labels[i] == c;
      if (pc && lc) ++tp;
      if (pc && !lc) ++fp;
      if (!pc && lc) ++fn;
    }
    const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    f1_sum += precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return f1_sum / nclasses;
}

double precision_at_k(const std::vector<double>& scores, const std::vector<int>& labels, int k) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw InvalidInputError("precision_at_k: need equal nonempty score/label lists");
  }
  if (k <= 0) throw ConfigError("precision_at_k: k must be positive");
  if (static_cast<std::size_t>(k) > scores.size()) {
    throw ConfigError("precision_at_k: k exceeds the number of items");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;  // ties toward the lower index
  });
  long hits = 0;
  for (int i = 0; i < k; ++i) {
    if (labels[order[static_cast<std::size_t>(i)]] == 1) ++hits;
  }
  return static_cast<double>(hits) / k;
}

double rouge_l(const std::vector<int>& candidate, const std::vector<int>& reference) {
  if (reference.empty()) throw InvalidInputError("rouge_l: empty reference");
  if (candidate.empty()) return 0.0;
  const std::size_t m = candidate.size();
  const std::size_t n = reference.size();
  std::vector<int> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1
                                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const int lcs = prev[n];
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(m);
  const double r = static_cast<double>(lcs) / static_cast<double>(n);
  return 2.0 * p * r / (p + r);
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size() || preds.empty()) {
    throw InvalidInputError("accuracy: need equal nonempty prediction/label lists");
  }
  long hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

// ---------------------------------------------------------------------------
// dataset files
// ---------------------------------------------------------------------------

namespace {

void append_ints(std::string& out, const std::vector<int>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  out += ']';
}

void append_floats_9sig(std::string& out, const std::vector<double>& v) {
  char buf[40];
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    std::snprintf(buf, sizeof(buf), "%.9g", v[i]);
    out += buf;
  }
  out += ']';
}

}  // namespace

void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_dataset: cannot open " + path);

  nlohmann::json header;
  header["format_version"] = 1;
  header["task"] = task_name(ds.task);
  header["split"] = ds.split;
  header["seed"] = ds.seed;
  header["generation_params"] = {{"sample_rate_hz", ds.params.sample_rate_hz},
                                 {"duration_s", ds.params.duration_s},
                                 {"noise_sigma", ds.params.noise_sigma},
                                 {"gain_lo", ds.params.gain_lo},
                                 {"gain_hi", ds.params.gain_hi}};
  header["num_examples"] = ds.examples.size();
  out << header.dump() << "\n";

  std::string line;
  for (const TaskExample& ex : ds.examples) {
    line.clear();
    line += "{\"task\":\"";
    line += task_name(ex.task);
    line += "\",\"sample_rate_hz\":";
    line += std::to_string(ex.audio.sample_rate_hz);
    line += ",\"audio\":";
    append_floats_9sig(line, ex.audio.samples);
    line += ",\"instruction_ids\":";
    append_ints(line, ex.instruction_ids);
    line += ",\"target_ids\":";
    append_ints(line, ex.target_ids);
    line += ",\"label\":";
    if (ex.task == Task::DS) {
      append_ints(line, ex.symbols);
    } else {
      line += std::to_string(ex.label);
    }
    line += "}";
    out << line << "\n";
  }
  if (!out) throw ConfigError("write_dataset: write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("read_dataset: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInputError("read_dataset: missing header");
  nlohmann::json header = nlohmann::json::parse(line);
  if (header.value("format_version", 0) != 1) {
    throw InvalidInputError("read_dataset: unsupported format_version");
  }
  Dataset ds;
  ds.task = task_from_name(header.at("task").get<std::string>());
  ds.split = header.value("split", "train");
  ds.seed = header.at("seed").get<std::uint64_t>();
  const auto& gp = header.at("generation_params");
  ds.params.sample_rate_hz = gp.at("sample_rate_hz").get<int>();
  ds.params.duration_s = gp.at("duration_s").get<double>();
  ds.params.noise_sigma = gp.at("noise_sigma").get<double>();
  ds.params.gain_lo = gp.at("gain_lo").get<double>();
  ds.params.gain_hi = gp.at("gain_hi").get<double>();

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line);
    TaskExample ex;
    ex.task = task_from_name(rec.at("task").get<std::string>());
    if (ex.task != ds.task) throw InvalidInputError("read_dataset: mixed tasks in one file");
    ex.audio.sample_rate_hz = rec.at("sample_rate_hz").get<int>();
    ex.audio.samples = rec.at("audio").get<std::vector<double>>();
    ex.instruction_ids = rec.at("instruction_ids").get<std::vector<int>>();
    ex.target_ids = rec.at("target_ids").get<std::vector<int>>();
    if (ex.task == Task::DS) {
      ex.symbols = rec.at("label").get<std::vector<int>>();
      ex.label = ex.symbols.empty() ? 0 : ex.symbols[0];
    } else {
      ex.label = rec.at("label").get<int>();
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

}  // namespace wee
