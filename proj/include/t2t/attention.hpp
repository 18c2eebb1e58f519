#pragma once

#include <span>
#include <vector>

#include "t2t/autodiff.hpp"
#include "t2t/model.hpp"

namespace t2t {

// Projected keys V h_i for a set of representations; they do not depend on
// the decoder step, so callers compute them once per example.
std::vector<ad::Var> attention_keys(std::span<const ad::Var> reps, const AttentionVars& p);

// score_i = v . tanh(U s_prev + V h_i), as a length-n vector
ad::Var attention_scores(std::span<const ad::Var> keys, ad::Var s_prev, const AttentionVars& p);

struct MacroAttention {
  ad::Var beta;     // softmax over the M fields
  ad::Var context;  // c^g_t = sum_i beta_i h^g_i
};

MacroAttention macro_attention(std::span<const ad::Var> field_reps,
                               std::span<const ad::Var> keys, ad::Var s_prev,
                               const AttentionVars& p);
MacroAttention macro_attention(std::span<const ad::Var> field_reps, ad::Var s_prev,
                               const AttentionVars& p);

// alpha over all W values jointly, across fields
ad::Var micro_attention(std::span<const ad::Var> keys, ad::Var s_prev, const AttentionVars& p);
ad::Var micro_attention_reps(std::span<const ad::Var> value_reps, ad::Var s_prev,
                             const AttentionVars& p);

struct FusedAttention {
  ad::Var alpha_fused;  // alpha_j * beta_{F(j)}, renormalized
  ad::Var context;      // c^w_t = sum_j alpha'_j h^w_j
};

// field_of maps each value position to its 0-based field index.
FusedAttention fuse_attention(ad::Var alpha, ad::Var beta, std::span<const int> field_of,
                              std::span<const ad::Var> value_reps);

}  // namespace t2t
