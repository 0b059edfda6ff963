#include "marl/nn.h"

#include <stdexcept>

namespace marl {

NodeId mlp(Graph& g, const std::string& prefix, const MlpSpec& spec, NodeId input) {
  if (spec.widths.empty()) throw std::invalid_argument("mlp: no layers in '" + prefix + "'");
  NodeId x = input;
  for (std::size_t l = 0; l < spec.widths.size(); ++l) {
    int in_w = g.tape.val(x).cols();
    int out_w = spec.widths[l];
    std::string tag = prefix + "." + std::to_string(l);
    NodeId w = g.param(tag + ".w", {in_w, out_w}, Init::UniformFanIn);
    NodeId b = g.param(tag + ".b", {out_w}, Init::Zeros);
    if (g.tape.val(x).cols() != g.tape.val(w).rows())
      throw std::invalid_argument("mlp: width mismatch at layer '" + tag + "'");
    x = g.tape.add_rowvec(g.tape.matmul(x, w), b);
    bool last = l + 1 == spec.widths.size();
    if (!last || spec.final_activation) {
      switch (spec.act) {
        case Activation::Tanh: x = g.tape.tanh_op(x); break;
        case Activation::Relu: x = g.tape.relu(x); break;
        case Activation::Linear: break;
      }
    }
  }
  return x;
}

NodeId lstm_zero_state(Graph& g, int rows, int hidden) {
  return g.tape.constant(Array::zeros({rows, hidden}));
}

LstmState lstm_step(Graph& g, const std::string& prefix, NodeId input, LstmState state, int hidden) {
  Tape& t = g.tape;
  int in_w = t.val(input).cols();
  if (t.val(state.h).cols() != hidden || t.val(state.c).cols() != hidden)
    throw std::invalid_argument("lstm_step: state width mismatch in '" + prefix + "'");
  NodeId wx = g.param(prefix + ".wx", {in_w, 4 * hidden}, Init::UniformFanIn);
  NodeId wh = g.param(prefix + ".wh", {hidden, 4 * hidden}, Init::UniformFanIn);
  NodeId b = g.param(prefix + ".b", {4 * hidden}, Init::LstmBias);
  NodeId z = t.add_rowvec(t.add(t.matmul(input, wx), t.matmul(state.h, wh)), b);
  NodeId gi = t.sigmoid(t.slice_cols(z, 0, hidden));
  NodeId gf = t.sigmoid(t.slice_cols(z, hidden, hidden));
  NodeId gc = t.tanh_op(t.slice_cols(z, 2 * hidden, hidden));
  NodeId go = t.sigmoid(t.slice_cols(z, 3 * hidden, hidden));
  NodeId c2 = t.add(t.mul(gf, state.c), t.mul(gi, gc));
  NodeId h2 = t.mul(go, t.tanh_op(c2));
  return {h2, c2};
}

std::vector<NodeId> bilstm_encode(Graph& g, const std::string& prefix,
                                  const std::vector<NodeId>& sequence, int hidden) {
  if (sequence.empty()) throw std::invalid_argument("bilstm_encode: empty sequence");
  int rows = g.tape.val(sequence[0]).rows();
  std::size_t T = sequence.size();
  std::vector<NodeId> fwd(T), bwd(T);
  LstmState s{lstm_zero_state(g, rows, hidden), lstm_zero_state(g, rows, hidden)};
  for (std::size_t t = 0; t < T; ++t) {
    s = lstm_step(g, prefix + ".fwd", sequence[t], s, hidden);
    fwd[t] = s.h;
  }
  s = {lstm_zero_state(g, rows, hidden), lstm_zero_state(g, rows, hidden)};
  for (std::size_t t = T; t-- > 0;) {
    s = lstm_step(g, prefix + ".bwd", sequence[t], s, hidden);
    bwd[t] = s.h;
  }
  std::vector<NodeId> out(T);
  for (std::size_t t = 0; t < T; ++t) out[t] = g.tape.concat_cols({fwd[t], bwd[t]});
  return out;
}

GumbelOut gumbel_softmax(Graph& g, NodeId logits, double temperature, Rng& rng, GumbelMode mode) {
  if (temperature <= 0.0) throw std::invalid_argument("gumbel_softmax: temperature must be positive");
  Tape& t = g.tape;
  Array noise(t.val(logits).shape);
  for (double& v : noise.data) v = gumbel_noise(rng);
  NodeId perturbed = t.scale(t.add(logits, t.constant(std::move(noise))), 1.0 / temperature);
  NodeId relaxed = t.softmax_rows(perturbed);
  NodeId out = mode == GumbelMode::StraightThrough ? t.straight_through(relaxed) : relaxed;
  return {out, relaxed};
}

}  // namespace marl
