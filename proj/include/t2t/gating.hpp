#pragma once

#include "t2t/autodiff.hpp"
#include "t2t/layers.hpp"
#include "t2t/model.hpp"

namespace t2t {

// Orthogonalization strength in (0,1)^d: a per-dimension sigmoid of the
// decoder state, or a constant learned vector under GammaMode::kConstant.
ad::Var gamma_of(ad::Var s_prev, const GateVars& p, GammaMode mode);

// Soft Gram-Schmidt step:
//   out = c_g_raw - gamma * (<ref, c_g_raw> / <ref, ref>) * ref
// A reference with squared norm below 1e-12 leaves c_g_raw unchanged.
ad::Var orthogonalize(ad::Var c_g_raw, ad::Var reference, ad::Var gamma);

// Stay-on gate from the previous macro context and previous combined
// context: f_t = sigmoid(Wt c^g_{t-1} + Wg c_{t-1} + b).
ad::Var forget_gate(ad::Var cg_prev, ad::Var c_prev, const GateVars& p);

// c_t = (1 - f) * c_g + f * c_prev
ad::Var gate_combine(ad::Var f, ad::Var c_g, ad::Var c_prev);

// One GRU step over the stream of combined contexts; the state is the next
// step's orthogonalization reference under GatingVariant::kContextGru.
ad::Var update_history(ad::Var history_state, ad::Var c_t, const GruVars& history_gru);

}  // namespace t2t
