#include "t2t/layers.hpp"

#include <fstream>
#include <sstream>

#include "t2t/error.hpp"

namespace t2t {

using ad::Tensor;
using ad::Var;

GruParams GruParams::create(int input_dim, int state_dim) {
  GruParams p;
  p.Wz = Tensor::zeros({state_dim, input_dim}, true);
  p.Uz = Tensor::zeros({state_dim, state_dim}, true);
  p.bz = Tensor::zeros({state_dim}, true);
  p.Wr = Tensor::zeros({state_dim, input_dim}, true);
  p.Ur = Tensor::zeros({state_dim, state_dim}, true);
  p.br = Tensor::zeros({state_dim}, true);
  p.Wh = Tensor::zeros({state_dim, input_dim}, true);
  p.Uh = Tensor::zeros({state_dim, state_dim}, true);
  p.bh = Tensor::zeros({state_dim}, true);
  return p;
}

GruVars bind(ad::Tape& tape, const GruParams& p, bool requires_grad) {
  auto leaf = [&](const Tensor& t) {
    Tensor copy = t;
    copy.requires_grad = requires_grad;
    return tape.leaf(std::move(copy));
  };
  GruVars v;
  v.Wz = leaf(p.Wz);
  v.Uz = leaf(p.Uz);
  v.bz = leaf(p.bz);
  v.Wr = leaf(p.Wr);
  v.Ur = leaf(p.Ur);
  v.br = leaf(p.br);
  v.Wh = leaf(p.Wh);
  v.Uh = leaf(p.Uh);
  v.bh = leaf(p.bh);
  return v;
}

Var gru_step(const GruVars& p, Var x, Var h_prev) {
  Var z = ad::sigmoid(ad::add(ad::add(ad::matmul(p.Wz, x), ad::matmul(p.Uz, h_prev)), p.bz));
  Var r = ad::sigmoid(ad::add(ad::add(ad::matmul(p.Wr, x), ad::matmul(p.Ur, h_prev)), p.br));
  Var cand = ad::tanh(
      ad::add(ad::add(ad::matmul(p.Wh, x), ad::matmul(p.Uh, ad::mul(r, h_prev))), p.bh));
  // h' = (1 - z) * cand + z * h_prev
  Var keep = ad::mul(z, h_prev);
  Var update = ad::sub(cand, ad::mul(z, cand));
  return ad::add(update, keep);
}

BiGruResult bigru_run(const GruVars& fwd, const GruVars& bwd, std::span<const ad::Var> xs) {
  if (xs.empty()) throw Error("bigru_run: empty sequence");
  ad::Tape& tape = *xs[0].tape;
  const int d_h = fwd.bz.value().size();

  std::vector<Var> fwd_states(xs.size());
  Var h = tape.leaf(Tensor::zeros({d_h}));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    h = gru_step(fwd, xs[i], h);
    fwd_states[i] = h;
  }
  Var fwd_final = h;

  std::vector<Var> bwd_states(xs.size());
  h = tape.leaf(Tensor::zeros({d_h}));
  for (std::size_t i = xs.size(); i-- > 0;) {
    h = gru_step(bwd, xs[i], h);
    bwd_states[i] = h;
  }
  Var bwd_final = h;

  BiGruResult out;
  out.outputs.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out.outputs.push_back(ad::concat({fwd_states[i], bwd_states[i]}));
  }
  out.fwd_final = fwd_final;
  out.bwd_final = bwd_final;
  return out;
}

EmbeddingTable EmbeddingTable::create(int vocab_size, int dim) {
  EmbeddingTable t;
  t.weights = Tensor::zeros({vocab_size, dim}, true);
  return t;
}

Var embed(Var table, int id) {
  const Tensor& w = table.value();
  if (id < 0 || id >= w.rows()) {
    throw Error("embed: token id " + std::to_string(id) + " out of range for vocab of " +
                std::to_string(w.rows()));
  }
  return ad::row(table, id);
}

std::vector<Var> embed(Var table, std::span<const int> ids) {
  std::vector<Var> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(embed(table, id));
  return out;
}

Var affine(Var W, Var b, Var x) { return ad::add(ad::matmul(W, x), b); }

void init_uniform(Tensor& t, std::mt19937_64& rng, double range) {
  std::uniform_real_distribution<double> dist(-range, range);
  for (double& v : t.data) v = dist(rng);
}

void init_uniform(GruParams& p, std::mt19937_64& rng, double range) {
  for (Tensor* t : {&p.Wz, &p.Uz, &p.bz, &p.Wr, &p.Ur, &p.br, &p.Wh, &p.Uh, &p.bh}) {
    init_uniform(*t, rng, range);
  }
}

int load_pretrained_embeddings(EmbeddingTable& table,
                               const std::function<int(const std::string&)>& lookup,
                               const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read embedding file: " + path.string());

  const int dim = table.dim();
  int loaded = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    const int id = lookup(word);
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(dim));
    double v;
    while (ss >> v) vals.push_back(v);
    if (static_cast<int>(vals.size()) != dim) {
      throw DataError("embedding file line " + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " values, got " + std::to_string(vals.size()));
    }
    if (id < 0) continue;
    std::copy(vals.begin(), vals.end(),
              table.weights.data.begin() + static_cast<std::size_t>(id) * dim);
    ++loaded;
  }
  return loaded;
}

}  // namespace t2t
