#include "t2t/attention.hpp"

namespace t2t {

using ad::Var;

std::vector<Var> attention_keys(std::span<const Var> reps, const AttentionVars& p) {
  std::vector<Var> keys;
  keys.reserve(reps.size());
  for (Var h : reps) keys.push_back(ad::matmul(p.V, h));
  return keys;
}

Var attention_scores(std::span<const Var> keys, Var s_prev, const AttentionVars& p) {
  if (keys.empty()) throw Error("attention_scores: no keys");
  Var query = ad::matmul(p.U, s_prev);
  std::vector<Var> scores;
  scores.reserve(keys.size());
  for (Var key : keys) {
    scores.push_back(ad::dot(p.v, ad::tanh(ad::add(query, key))));
  }
  return ad::concat(scores);
}

MacroAttention macro_attention(std::span<const Var> field_reps, std::span<const Var> keys,
                               Var s_prev, const AttentionVars& p) {
  MacroAttention out;
  out.beta = ad::softmax(attention_scores(keys, s_prev, p));
  out.context = ad::weighted_sum(out.beta, field_reps);
  return out;
}

MacroAttention macro_attention(std::span<const Var> field_reps, Var s_prev,
                               const AttentionVars& p) {
  return macro_attention(field_reps, attention_keys(field_reps, p), s_prev, p);
}

Var micro_attention(std::span<const Var> keys, Var s_prev, const AttentionVars& p) {
  return ad::softmax(attention_scores(keys, s_prev, p));
}

Var micro_attention_reps(std::span<const Var> value_reps, Var s_prev, const AttentionVars& p) {
  return micro_attention(attention_keys(value_reps, p), s_prev, p);
}

FusedAttention fuse_attention(Var alpha, Var beta, std::span<const int> field_of,
                              std::span<const Var> value_reps) {
  const int w = alpha.value().size();
  if (static_cast<int>(field_of.size()) != w) {
    throw ShapeError("fuse_attention: field_of has " + std::to_string(field_of.size()) +
                     " entries for " + std::to_string(w) + " values");
  }
  const int m = beta.value().size();
  for (int f : field_of) {
    if (f < 0 || f >= m) {
      throw ShapeError("fuse_attention: field index " + std::to_string(f) +
                       " out of range for " + std::to_string(m) + " fields");
    }
  }

  Var beta_of_value = ad::gather(beta, field_of);
  Var unnormalized = ad::mul(alpha, beta_of_value);
  Var denom = ad::sum(unnormalized);
  // softmax inputs keep the denominator strictly positive; guard anyway
  if (denom.value().data[0] < 1e-30) {
    throw NumericError("fuse_attention: degenerate fused attention (denominator ~ 0)");
  }

  FusedAttention out;
  out.alpha_fused = ad::div_scalar(unnormalized, denom);
  out.context = ad::weighted_sum(out.alpha_fused, value_reps);
  return out;
}

}  // namespace t2t
