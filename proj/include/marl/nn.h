#pragma once

#include <string>
#include <utility>
#include <vector>

#include "marl/paramstore.h"
#include "marl/rng.h"

namespace marl {

enum class Activation { Tanh, Relu, Linear };

struct MlpSpec {
  std::vector<int> widths;  // hidden widths followed by the output width
  Activation act = Activation::Tanh;
  bool final_activation = false;
};

// Fully connected stack under the parameter prefix ("<prefix>.w0", "<prefix>.b0", ...).
NodeId mlp(Graph& g, const std::string& prefix, const MlpSpec& spec, NodeId input);

struct LstmState {
  NodeId h;
  NodeId c;
};

// Standard gate arithmetic (sigmoid i/f/o, tanh candidate), forget bias +1 at init.
LstmState lstm_step(Graph& g, const std::string& prefix, NodeId input, LstmState state, int hidden);

NodeId lstm_zero_state(Graph& g, int rows, int hidden);

// Bidirectional encoding: output t = concat(forward hidden at t, backward hidden at t).
std::vector<NodeId> bilstm_encode(Graph& g, const std::string& prefix,
                                  const std::vector<NodeId>& sequence, int hidden);

enum class GumbelMode { Relaxed, StraightThrough };

struct GumbelOut {
  NodeId out;      // relaxed or one-hot depending on mode
  NodeId relaxed;  // always the relaxed sample
};

// Rowwise gumbel-softmax over logits [R,C]; noise drawn from rng, temperature > 0.
GumbelOut gumbel_softmax(Graph& g, NodeId logits, double temperature, Rng& rng, GumbelMode mode);

}  // namespace marl
