#pragma once

#include <random>
#include <string>
#include <vector>

#include "t2t/autodiff.hpp"
#include "t2t/layers.hpp"

namespace t2t {

enum class GatingVariant { kPrevContext, kContextGru };
enum class FieldRep { kConcat, kNameOnly, kValueGru };
enum class GammaMode { kState, kConstant };

struct ModelConfig {
  int hidden = 256;  // GRU state size, shared by encoder and decoder
  int embed = 300;
  bool bifocal = true;  // macro attention + fusion; off = flat attention over the flattened input
  bool gating = true;   // forget gate + orthogonalization (needs bifocal)
  GatingVariant gating_variant = GatingVariant::kContextGru;
  FieldRep field_rep = FieldRep::kConcat;
  GammaMode gamma_mode = GammaMode::kState;
  int max_len = 60;

  int context_dim() const { return 2 * hidden; }
  int field_rep_input_dim() const;  // input to the across-fields bi-GRU
  int decoder_input_dim() const;
};

// Score projections for one attention level: score_i = v . tanh(U s + V h_i).
struct AttentionParams {
  ad::Tensor U, V, v;
  static AttentionParams create(int attn_dim, int state_dim, int rep_dim);
};

struct AttentionVars {
  ad::Var U, V, v;
};

// Forget gate (Wt, Wg, b), orthogonalization strength (gamma_*) and the
// context-history GRU used by the kContextGru variant.
struct GateParams {
  ad::Tensor Wt, Wg, b;
  ad::Tensor gamma_W, gamma_b;
  ad::Tensor gamma_const;  // free vector, squashed through sigmoid
  GruParams history;
  static GateParams create(int context_dim, int state_dim);
};

struct GateVars {
  ad::Var Wt, Wg, b;
  ad::Var gamma_W, gamma_b;
  ad::Var gamma_const;
  GruVars history;
};

struct NamedParam {
  std::string name;
  ad::Tensor* tensor;
};

// Every trainable tensor of the model, owned by value. Shapes follow the
// config; checkpoints must be loaded with the config they were saved under.
struct ModelParams {
  ModelConfig config;
  EmbeddingTable word_emb;
  EmbeddingTable field_emb;
  GruParams value_fwd, value_bwd;  // over values within a field / the flattened sequence
  GruParams field_fwd, field_bwd;  // across fields
  GruParams decoder;
  AttentionParams macro, micro;
  GateParams gate;
  ad::Tensor init_W, init_b;  // s_0 = tanh(init_W . mean(reps) + init_b)
  ad::Tensor out_W, out_b;

  static ModelParams create(const ModelConfig& config, int word_vocab, int field_vocab);

  // uniform(-0.08, 0.08) init; the PAD embedding row stays zero
  void init(std::mt19937_64& rng);

  std::vector<NamedParam> named_params();
  int vocab_size() const { return word_emb.vocab_size(); }
};

// Tape-bound leaves for one forward/backward pass. `leaves` is aligned with
// named_params() order so gradients can be read back by index.
struct ModelVars {
  ad::Var word_emb, field_emb;
  GruVars value_fwd, value_bwd, field_fwd, field_bwd, decoder;
  AttentionVars macro, micro;
  GateVars gate;
  ad::Var init_W, init_b, out_W, out_b;
  std::vector<ad::Var> leaves;
};

ModelVars bind(ad::Tape& tape, const ModelParams& params, bool requires_grad);

}  // namespace t2t
