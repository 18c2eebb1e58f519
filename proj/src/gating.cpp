#include "t2t/gating.hpp"

namespace t2t {

using ad::Var;

namespace {
constexpr double kZeroReferenceEps = 1e-12;
}

Var gamma_of(Var s_prev, const GateVars& p, GammaMode mode) {
  if (mode == GammaMode::kConstant) return ad::sigmoid(p.gamma_const);
  return ad::sigmoid(affine(p.gamma_W, p.gamma_b, s_prev));
}

Var orthogonalize(Var c_g_raw, Var reference, Var gamma) {
  const ad::Tensor& ref = reference.value();
  if (ref.shape != c_g_raw.value().shape) {
    throw ShapeError("orthogonalize: shape mismatch " + c_g_raw.value().shape_str() + " vs " +
                     ref.shape_str());
  }
  double norm_sq = 0.0;
  for (double v : ref.data) norm_sq += v * v;
  if (norm_sq < kZeroReferenceEps) return c_g_raw;

  Var num = ad::dot(reference, c_g_raw);
  Var den = ad::dot(reference, reference);
  Var projection = ad::scalar_mul(reference, ad::div_scalar(num, den));
  return ad::sub(c_g_raw, ad::mul(gamma, projection));
}

Var forget_gate(Var cg_prev, Var c_prev, const GateVars& p) {
  return ad::sigmoid(
      ad::add(ad::add(ad::matmul(p.Wt, cg_prev), ad::matmul(p.Wg, c_prev)), p.b));
}

Var gate_combine(Var f, Var c_g, Var c_prev) {
  // (1 - f) * c_g + f * c_prev
  Var move_on = ad::sub(c_g, ad::mul(f, c_g));
  return ad::add(move_on, ad::mul(f, c_prev));
}

Var update_history(Var history_state, Var c_t, const GruVars& history_gru) {
  return gru_step(history_gru, c_t, history_state);
}

}  // namespace t2t
