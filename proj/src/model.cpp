#include "t2t/model.hpp"

namespace t2t {

using ad::Tensor;
using ad::Var;

int ModelConfig::field_rep_input_dim() const {
  switch (field_rep) {
    case FieldRep::kNameOnly: return embed;
    case FieldRep::kValueGru: return context_dim();
    case FieldRep::kConcat: return embed + context_dim();
  }
  return 0;
}

int ModelConfig::decoder_input_dim() const {
  // [embedding(prev)] + [c_t when bifocal] + [c_w]
  return embed + (bifocal ? 2 * context_dim() : context_dim());
}

AttentionParams AttentionParams::create(int attn_dim, int state_dim, int rep_dim) {
  AttentionParams p;
  p.U = Tensor::zeros({attn_dim, state_dim}, true);
  p.V = Tensor::zeros({attn_dim, rep_dim}, true);
  p.v = Tensor::zeros({attn_dim}, true);
  return p;
}

GateParams GateParams::create(int context_dim, int state_dim) {
  GateParams p;
  p.Wt = Tensor::zeros({context_dim, context_dim}, true);
  p.Wg = Tensor::zeros({context_dim, context_dim}, true);
  p.b = Tensor::zeros({context_dim}, true);
  p.gamma_W = Tensor::zeros({context_dim, state_dim}, true);
  p.gamma_b = Tensor::zeros({context_dim}, true);
  p.gamma_const = Tensor::zeros({context_dim}, true);
  p.history = GruParams::create(context_dim, context_dim);
  return p;
}

ModelParams ModelParams::create(const ModelConfig& config, int word_vocab, int field_vocab) {
  ModelParams m;
  m.config = config;
  const int h = config.hidden;
  const int e = config.embed;
  const int ctx = config.context_dim();

  m.word_emb = EmbeddingTable::create(word_vocab, e);
  m.field_emb = EmbeddingTable::create(field_vocab, e);
  m.value_fwd = GruParams::create(e, h);
  m.value_bwd = GruParams::create(e, h);
  m.field_fwd = GruParams::create(config.field_rep_input_dim(), h);
  m.field_bwd = GruParams::create(config.field_rep_input_dim(), h);
  m.decoder = GruParams::create(config.decoder_input_dim(), h);
  m.macro = AttentionParams::create(h, h, ctx);
  m.micro = AttentionParams::create(h, h, ctx);
  m.gate = GateParams::create(ctx, h);
  m.init_W = Tensor::zeros({h, ctx}, true);
  m.init_b = Tensor::zeros({h}, true);
  m.out_W = Tensor::zeros({word_vocab, h}, true);
  m.out_b = Tensor::zeros({word_vocab}, true);
  return m;
}

void ModelParams::init(std::mt19937_64& rng) {
  for (NamedParam& p : named_params()) init_uniform(*p.tensor, rng);
  // PAD never carries signal
  const int e = config.embed;
  for (int j = 0; j < e; ++j) word_emb.weights.data[static_cast<std::size_t>(j)] = 0.0;
}

namespace {

void add_gru(std::vector<NamedParam>& out, const std::string& prefix, GruParams& p) {
  out.push_back({prefix + ".Wz", &p.Wz});
  out.push_back({prefix + ".Uz", &p.Uz});
  out.push_back({prefix + ".bz", &p.bz});
  out.push_back({prefix + ".Wr", &p.Wr});
  out.push_back({prefix + ".Ur", &p.Ur});
  out.push_back({prefix + ".br", &p.br});
  out.push_back({prefix + ".Wh", &p.Wh});
  out.push_back({prefix + ".Uh", &p.Uh});
  out.push_back({prefix + ".bh", &p.bh});
}

}  // namespace

std::vector<NamedParam> ModelParams::named_params() {
  std::vector<NamedParam> out;
  out.push_back({"embed.word", &word_emb.weights});
  out.push_back({"embed.field", &field_emb.weights});
  add_gru(out, "enc.value.fwd", value_fwd);
  add_gru(out, "enc.value.bwd", value_bwd);
  add_gru(out, "enc.field.fwd", field_fwd);
  add_gru(out, "enc.field.bwd", field_bwd);
  add_gru(out, "dec.gru", decoder);
  out.push_back({"attn.macro.U", &macro.U});
  out.push_back({"attn.macro.V", &macro.V});
  out.push_back({"attn.macro.v", &macro.v});
  out.push_back({"attn.micro.U", &micro.U});
  out.push_back({"attn.micro.V", &micro.V});
  out.push_back({"attn.micro.v", &micro.v});
  out.push_back({"gate.Wt", &gate.Wt});
  out.push_back({"gate.Wg", &gate.Wg});
  out.push_back({"gate.b", &gate.b});
  out.push_back({"gate.gamma.W", &gate.gamma_W});
  out.push_back({"gate.gamma.b", &gate.gamma_b});
  out.push_back({"gate.gamma.const", &gate.gamma_const});
  add_gru(out, "gate.history", gate.history);
  out.push_back({"dec.init.W", &init_W});
  out.push_back({"dec.init.b", &init_b});
  out.push_back({"dec.out.W", &out_W});
  out.push_back({"dec.out.b", &out_b});
  return out;
}

ModelVars bind(ad::Tape& tape, const ModelParams& params, bool requires_grad) {
  // leaves must line up with named_params() order
  ModelVars v;
  auto& m = const_cast<ModelParams&>(params);
  for (NamedParam& p : m.named_params()) {
    Tensor copy = *p.tensor;
    copy.requires_grad = requires_grad;
    v.leaves.push_back(tape.leaf(std::move(copy)));
  }

  std::size_t at = 0;
  auto take = [&]() { return v.leaves[at++]; };
  auto take_gru = [&]() {
    GruVars g;
    g.Wz = take(); g.Uz = take(); g.bz = take();
    g.Wr = take(); g.Ur = take(); g.br = take();
    g.Wh = take(); g.Uh = take(); g.bh = take();
    return g;
  };

  v.word_emb = take();
  v.field_emb = take();
  v.value_fwd = take_gru();
  v.value_bwd = take_gru();
  v.field_fwd = take_gru();
  v.field_bwd = take_gru();
  v.decoder = take_gru();
  v.macro.U = take(); v.macro.V = take(); v.macro.v = take();
  v.micro.U = take(); v.micro.V = take(); v.micro.v = take();
  v.gate.Wt = take(); v.gate.Wg = take(); v.gate.b = take();
  v.gate.gamma_W = take(); v.gate.gamma_b = take(); v.gate.gamma_const = take();
  v.gate.history = take_gru();
  v.init_W = take(); v.init_b = take();
  v.out_W = take(); v.out_b = take();
  return v;
}

}  // namespace t2t
