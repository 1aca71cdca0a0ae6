#include "wee/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "wee/kernels.hpp"
#include "wee/optim.hpp"
#include "wee/rng.hpp"

namespace wee {

namespace {

std::string block_name(int i) { return "decoder.block" + std::to_string(i); }

std::vector<double> gaussian(Rng& rng, std::size_t n, double stddev) {
  std::vector<double> v(n);
  for (double& x : v) x = stddev * rng.normal();
  return v;
}

int argmax_lowest(const double* v, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

void DecoderConfig::validate() const {
  if (vocab < 2) throw ConfigError("decoder: vocab must be >= 2");
  if (num_heads < 1 || d_llm % num_heads != 0) {
    throw ConfigError("decoder: d_llm must be divisible by num_heads");
  }
  if (num_blocks < 1) throw ConfigError("decoder: need at least one block");
  if (max_len < 1) throw ConfigError("decoder: max_len must be >= 1");
  if (lora_rank < 1) throw ConfigError("decoder: lora_rank must be >= 1");
}

void init_decoder_params(ParamStore& store, const DecoderConfig& cfg, std::uint64_t seed,
                         bool trainable) {
  cfg.validate();
  Rng rng(hash_seed(seed, 0xdecodeULL));
  const int d = cfg.d_llm;
  const int h = 4 * d;
  store.create("decoder.tok_emb", {cfg.vocab, d}, gaussian(rng, cfg.vocab * d, 0.1), trainable);
  store.create("decoder.pos_emb", {cfg.max_len, d}, gaussian(rng, cfg.max_len * d, 0.1),
               trainable);
  for (int i = 0; i < cfg.num_blocks; ++i) {
    const std::string b = block_name(i);
    store.create(b + ".ln1.g", {d}, std::vector<double>(d, 1.0), trainable);
    store.create(b + ".ln1.b", {d}, std::vector<double>(d, 0.0), trainable);
    store.create(b + ".attn.wq", {d, d}, gaussian(rng, d * d, 0.05), trainable);
    store.create(b + ".attn.wk", {d, d}, gaussian(rng, d * d, 0.05), trainable);
    store.create(b + ".attn.wv", {d, d}, gaussian(rng, d * d, 0.05), trainable);
    store.create(b + ".attn.wo", {d, d}, gaussian(rng, d * d, 0.05), trainable);
    store.create(b + ".ln2.g", {d}, std::vector<double>(d, 1.0), trainable);
    store.create(b + ".ln2.b", {d}, std::vector<double>(d, 0.0), trainable);
    store.create(b + ".mlp.w1", {h, d}, gaussian(rng, h * d, 0.05), trainable);
    store.create(b + ".mlp.b1", {h}, std::vector<double>(h, 0.0), trainable);
    store.create(b + ".mlp.w2", {d, h}, gaussian(rng, d * h, 0.05), trainable);
    store.create(b + ".mlp.b2", {d}, std::vector<double>(d, 0.0), trainable);
  }
  store.create("decoder.final_ln.g", {d}, std::vector<double>(d, 1.0), trainable);
  store.create("decoder.final_ln.b", {d}, std::vector<double>(d, 0.0), trainable);
  store.create("decoder.head", {cfg.vocab, d}, gaussian(rng, cfg.vocab * d, 0.05), trainable);
}

void init_lora_params(ParamStore& store, const DecoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(hash_seed(seed, 0x10a4ULL));
  const int d = cfg.d_llm;
  const int r = cfg.lora_rank;
  for (int i = 0; i < cfg.num_blocks; ++i) {
    for (const char* which : {"q", "v"}) {
      const std::string base = "lora.block" + std::to_string(i) + "." + which;
      store.create(base + ".a", {r, d}, gaussian(rng, static_cast<std::size_t>(r) * d, 0.05),
                   true);
      // Zero B keeps the delta inert at initialization.
      store.create(base + ".b", {d, r}, std::vector<double>(static_cast<std::size_t>(d) * r, 0.0),
                   true);
    }
  }
}

DiffArray apply_lora(const DiffArray& frozen_w, const DiffArray& a, const DiffArray& b,
                     double alpha, const DiffArray& input) {
  if (frozen_w.ndim() != 2 || a.ndim() != 2 || b.ndim() != 2) {
    throw ShapeError("apply_lora: expected 2-D weight, A, B");
  }
  const int out_dim = frozen_w.dim(0);
  const int in_dim = frozen_w.dim(1);
  const int r = a.dim(0);
  if (a.dim(1) != in_dim || b.dim(0) != out_dim || b.dim(1) != r) {
    throw ShapeError("apply_lora: W " + shape_str(frozen_w.shape()) + ", A " +
                     shape_str(a.shape()) + ", B " + shape_str(b.shape()));
  }
  DiffArray delta = mul_scalar(matmul(b, a), alpha / static_cast<double>(r));
  return matmul_nt(input, add(frozen_w, delta));
}

DiffArray decoder_forward(const ParamStore& store, const DecoderConfig& cfg,
                          const DiffArray& audio_embeds, const std::vector<int>& token_ids,
                          bool use_lora) {
  cfg.validate();
  const int d = cfg.d_llm;
  const int na = audio_embeds.defined() ? audio_embeds.dim(0) : 0;
  const int len = na + static_cast<int>(token_ids.size());
  if (len < 1) throw InvalidInputError("decoder_forward: empty sequence");
  if (len > cfg.max_len) {
    throw CapacityError("decoder_forward: sequence length " + std::to_string(len) +
                        " exceeds max_len " + std::to_string(cfg.max_len));
  }
  if (audio_embeds.defined() && (audio_embeds.ndim() != 2 || audio_embeds.dim(1) != d)) {
    throw ShapeError("decoder_forward: audio embeddings must be N x d_llm");
  }

  DiffArray x;
  if (!token_ids.empty()) {
    DiffArray tok = embedding_rows(store.get("decoder.tok_emb"), token_ids);
    x = audio_embeds.defined() ? concat_rows(audio_embeds, tok) : tok;
  } else {
    x = audio_embeds;
  }
  std::vector<int> positions(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) positions[static_cast<std::size_t>(i)] = i;
  x = add(x, embedding_rows(store.get("decoder.pos_emb"), positions));

  const int nh = cfg.num_heads;
  const int dh = d / nh;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int i = 0; i < cfg.num_blocks; ++i) {
    const std::string b = block_name(i);
    DiffArray normed = layer_norm(x, store.get(b + ".ln1.g"), store.get(b + ".ln1.b"));
    DiffArray q, v;
    if (use_lora) {
      const std::string lb = "lora.block" + std::to_string(i);
      q = apply_lora(store.get(b + ".attn.wq"), store.get(lb + ".q.a"), store.get(lb + ".q.b"),
                     cfg.lora_alpha, normed);
      v = apply_lora(store.get(b + ".attn.wv"), store.get(lb + ".v.a"), store.get(lb + ".v.b"),
                     cfg.lora_alpha, normed);
    } else {
      q = matmul_nt(normed, store.get(b + ".attn.wq"));
      v = matmul_nt(normed, store.get(b + ".attn.wv"));
    }
    DiffArray k = matmul_nt(normed, store.get(b + ".attn.wk"));

    std::vector<DiffArray> heads;
    heads.reserve(static_cast<std::size_t>(nh));
    for (int hh = 0; hh < nh; ++hh) {
      DiffArray qh = slice_cols(q, hh * dh, dh);
      DiffArray kh = slice_cols(k, hh * dh, dh);
      DiffArray vh = slice_cols(v, hh * dh, dh);
      DiffArray attn = causal_softmax(mul_scalar(matmul_nt(qh, kh), scale));
      heads.push_back(matmul(attn, vh));
    }
    DiffArray merged = nh == 1 ? heads[0] : concat_features(heads);
    x = add(x, matmul_nt(merged, store.get(b + ".attn.wo")));

    DiffArray normed2 = layer_norm(x, store.get(b + ".ln2.g"), store.get(b + ".ln2.b"));
    DiffArray hidden =
        gelu(add_rowvec(matmul_nt(normed2, store.get(b + ".mlp.w1")), store.get(b + ".mlp.b1")));
    DiffArray mlp_out =
        add_rowvec(matmul_nt(hidden, store.get(b + ".mlp.w2")), store.get(b + ".mlp.b2"));
    x = add(x, mlp_out);
  }

  DiffArray final_normed =
      layer_norm(x, store.get("decoder.final_ln.g"), store.get("decoder.final_ln.b"));
  return matmul_nt(final_normed, store.get("decoder.head"));
}

GenerateResult generate(const ParamStore& store, const DecoderConfig& cfg,
                        const DiffArray& audio_embeds, const std::vector<int>& instruction_ids,
                        int max_new, bool use_lora) {
  GenerateResult result;
  std::vector<int> tokens = instruction_ids;
  for (int step = 0; step < max_new; ++step) {
    DiffArray logits = decoder_forward(store, cfg, audio_embeds, tokens, use_lora);
    const int len = logits.dim(0);
    const double* row = logits.values().data() + static_cast<std::size_t>(len - 1) * cfg.vocab;
    if (step == 0) {
      result.first_probs.resize(static_cast<std::size_t>(cfg.vocab));
      kern::softmax_rows_ref(result.first_probs.data(), row, 1, cfg.vocab);
    }
    const int next = argmax_lowest(row, cfg.vocab);
    result.ids.push_back(next);
    tokens.push_back(next);
    if (next == vocab::EOS) break;
  }
  return result;
}

namespace {

struct CopyBatchItem {
  std::vector<int> ids;
  std::vector<int> rows;
  std::vector<int> labels;
};

CopyBatchItem make_copy_sequence(Rng& rng, int copy_len) {
  CopyBatchItem item;
  std::vector<int> payload(static_cast<std::size_t>(copy_len));
  for (int& t : payload) {
    t = vocab::GEN0 + static_cast<int>(rng.below(vocab::NUM_GENERIC));
  }
  item.ids = payload;
  item.ids.push_back(vocab::SEP);
  for (int t : payload) item.ids.push_back(t);
  item.ids.push_back(vocab::EOS);
  // Predict each copied token and the trailing EOS from the previous position.
  const int first_target = copy_len + 1;
  for (int p = first_target; p < static_cast<int>(item.ids.size()); ++p) {
    item.rows.push_back(p - 1);
    item.labels.push_back(item.ids[static_cast<std::size_t>(p)]);
  }
  return item;
}

double copy_holdout_accuracy(const ParamStore& store, const DecoderConfig& cfg,
                             const std::vector<CopyBatchItem>& holdout) {
  long correct = 0;
  long total = 0;
  for (const auto& item : holdout) {
    DiffArray logits = decoder_forward(store, cfg, DiffArray(), item.ids, false);
    for (std::size_t i = 0; i < item.rows.size(); ++i) {
      const double* row =
          logits.values().data() + static_cast<std::size_t>(item.rows[i]) * cfg.vocab;
      if (argmax_lowest(row, cfg.vocab) == item.labels[i]) ++correct;
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

PretrainResult pretrain_decoder(ParamStore& store, const DecoderConfig& cfg, std::uint64_t seed,
                                int max_steps, double target_accuracy, std::ostream* log) {
  cfg.validate();
  constexpr int kCopyLen = 8;
  constexpr int kBatch = 16;
  constexpr int kHoldout = 128;
  constexpr int kEvalEvery = 250;

  ParamStore work;
  init_decoder_params(work, cfg, seed, /*trainable=*/true);

  AdamW opt;
  opt.lr = 3e-3;
  opt.weight_decay = 0.0;

  std::vector<CopyBatchItem> holdout;
  holdout.reserve(kHoldout);
  for (int i = 0; i < kHoldout; ++i) {
    Rng rng(hash_seed(seed, 0xho1d0u7ULL, static_cast<std::uint64_t>(i)));
    holdout.push_back(make_copy_sequence(rng, kCopyLen));
  }

  PretrainResult result;
  for (int step = 0; step < max_steps; ++step) {
    work.zero_grads();
    std::vector<DiffArray> losses;
    losses.reserve(kBatch);
    for (int s = 0; s < kBatch; ++s) {
      Rng rng(hash_seed(seed, static_cast<std::uint64_t>(step) + 1,
                        static_cast<std::uint64_t>(s)));
      const CopyBatchItem item = make_copy_sequence(rng, kCopyLen);
      DiffArray logits = decoder_forward(work, cfg, DiffArray(), item.ids, false);
      losses.push_back(picked_nll_mean(logits, item.rows, item.labels));
    }
    DiffArray loss = mean_scalars(losses);
    loss.backward();
    opt.step(work);
    result.steps_run = step + 1;

    if ((step + 1) % kEvalEvery == 0 || step + 1 == max_steps) {
      result.holdout_accuracy = copy_holdout_accuracy(work, cfg, holdout);
      if (log) {
        (*log) << "pretrain step " << (step + 1) << " loss " << loss.scalar() << " holdout_acc "
               << result.holdout_accuracy << "\n";
      }
      if (result.holdout_accuracy >= target_accuracy) break;
    }
  }

  if (result.holdout_accuracy < target_accuracy) {
    throw TrainingFailure("pretrain_decoder: held-out accuracy " +
                          std::to_string(result.holdout_accuracy) + " below target " +
                          std::to_string(target_accuracy) + " after " +
                          std::to_string(result.steps_run) + " steps");
  }

  // Re-register every weight as frozen in the caller's store.
  for (const std::string& name : work.names()) {
    const DiffArray& p = work.get(name);
    store.create(name, p.shape(), p.values(), /*trainable=*/false);
  }
  return result;
}

}  // namespace wee
