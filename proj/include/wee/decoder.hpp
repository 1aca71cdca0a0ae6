#pragma once

#include <iosfwd>
#include <vector>

#include "wee/diff.hpp"
#include "wee/params.hpp"

namespace wee {

// Fixed 32-token vocabulary.
namespace vocab {
constexpr int PAD = 0;
constexpr int BOS = 1;
constexpr int EOS = 2;
constexpr int SEP = 3;
constexpr int TASK0 = 4;  // 4 task tokens
constexpr int CLS0 = 8;   // 4 class tokens
constexpr int RISK = 12;
constexpr int SAFE = 13;
constexpr int SYM0 = 14;  // 4 symbol tokens
constexpr int GEN0 = 18;  // 14 generic tokens (copy corpus)
constexpr int NUM_GENERIC = 14;
constexpr int SIZE = 32;
}  // namespace vocab

enum class Role : unsigned char { audio_prefix, instruction, target, pad };

struct TokenSequence {
  std::vector<int> ids;     // audio_prefix positions carry no meaningful id (PAD)
  std::vector<Role> roles;  // one role per position
};

struct DecoderConfig {
  int vocab = vocab::SIZE;
  int d_llm = 48;
  int num_blocks = 2;
  int num_heads = 2;
  int max_len = 64;
  int lora_rank = 4;
  double lora_alpha = 8.0;

  void validate() const;
};

// Creates the decoder's base weights in `store` under "decoder." (trainable
// iff `trainable`), initialized from `seed`.
void init_decoder_params(ParamStore& store, const DecoderConfig& cfg, std::uint64_t seed,
                         bool trainable);
// Creates zero-init LoRA deltas for the query/value projections of every
// block under "lora." (B starts at zero so the delta is inert).
void init_lora_params(ParamStore& store, const DecoderConfig& cfg, std::uint64_t seed);

// y = input * (W + (alpha/r) * B * A)^T. Only A and B carry gradients when
// the frozen weight does not require them.
DiffArray apply_lora(const DiffArray& frozen_w, const DiffArray& a, const DiffArray& b,
                     double alpha, const DiffArray& input);

// Causal forward over [audio; tokens]: audio embeddings (possibly undefined)
// are injected at the leading positions, tokens are embedded from the table;
// learned absolute positions are added everywhere. Returns logits L x V.
DiffArray decoder_forward(const ParamStore& store, const DecoderConfig& cfg,
                          const DiffArray& audio_embeds, const std::vector<int>& token_ids,
                          bool use_lora);

struct GenerateResult {
  std::vector<int> ids;             // generated ids, EOS included when reached
  std::vector<double> first_probs;  // softmax over V at the first generated position
};

// Greedy decoding until EOS or max_new tokens; deterministic.
GenerateResult generate(const ParamStore& store, const DecoderConfig& cfg,
                        const DiffArray& audio_embeds, const std::vector<int>& instruction_ids,
                        int max_new, bool use_lora);

struct PretrainResult {
  int steps_run = 0;
  double holdout_accuracy = 0.0;
};

// Copy-task pretraining: sequences of generic tokens followed by SEP must be
// reproduced (then EOS). Runs until the held-out next-token accuracy reaches
// `target_accuracy` or throws TrainingFailure after max_steps. The returned
// store has every decoder weight marked frozen.
PretrainResult pretrain_decoder(ParamStore& store, const DecoderConfig& cfg, std::uint64_t seed,
                                int max_steps, double target_accuracy = 0.99,
                                std::ostream* log = nullptr);

}  // namespace wee
