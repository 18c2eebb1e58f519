#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "t2t/autodiff.hpp"

namespace t2t {

// Standard GRU cell parameters for input size d_in and state size d_h.
// Update gate z, reset gate r, candidate h~:
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   h~ = tanh(Wh x + Uh (r * h) + bh)
//   h' = (1 - z) * h~ + z * h
struct GruParams {
  ad::Tensor Wz, Uz, bz;
  ad::Tensor Wr, Ur, br;
  ad::Tensor Wh, Uh, bh;

  static GruParams create(int input_dim, int state_dim);
  int input_dim() const { return Wz.cols(); }
  int state_dim() const { return Wz.rows(); }
};

// Tape-bound view of GruParams.
struct GruVars {
  ad::Var Wz, Uz, bz;
  ad::Var Wr, Ur, br;
  ad::Var Wh, Uh, bh;
};

GruVars bind(ad::Tape& tape, const GruParams& p, bool requires_grad);

ad::Var gru_step(const GruVars& p, ad::Var x, ad::Var h_prev);

// Outputs of a bidirectional GRU over a nonempty sequence.
struct BiGruResult {
  std::vector<ad::Var> outputs;  // per position: [fwd_state ; bwd_state]
  ad::Var fwd_final;             // forward state after the last position
  ad::Var bwd_final;             // backward state after position 0
  ad::Var final_state() const { return ad::concat({fwd_final, bwd_final}); }
};

BiGruResult bigru_run(const GruVars& fwd, const GruVars& bwd, std::span<const ad::Var> xs);

// vocab_size x dim lookup table. Row 0 is reserved for PAD and stays zero;
// training must keep it frozen.
struct EmbeddingTable {
  ad::Tensor weights;

  static EmbeddingTable create(int vocab_size, int dim);
  int vocab_size() const { return weights.rows(); }
  int dim() const { return weights.cols(); }
};

// Gathers one row; gradients scatter back to the touched row only.
ad::Var embed(ad::Var table, int id);
std::vector<ad::Var> embed(ad::Var table, std::span<const int> ids);

ad::Var affine(ad::Var W, ad::Var b, ad::Var x);

// Fills the tensor with uniform(-range, range) draws.
void init_uniform(ad::Tensor& t, std::mt19937_64& rng, double range = 0.08);
void init_uniform(GruParams& p, std::mt19937_64& rng, double range = 0.08);

// Loads pretrained vectors in the text format `word v1 v2 ... v_d`, one word
// per line, space separated. Rows are overwritten for words the lookup
// resolves (negative result = not in vocabulary). Returns the number of rows
// set. Dimension mismatches and unreadable files raise DataError.
int load_pretrained_embeddings(EmbeddingTable& table,
                               const std::function<int(const std::string&)>& lookup,
                               const std::filesystem::path& path);

}  // namespace t2t
