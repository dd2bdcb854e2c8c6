#pragma once

#include <string>
#include <vector>

#include "cogmen/graph.hpp"
#include "cogmen/serialize.hpp"
#include "cogmen/tensor.hpp"

namespace cogmen {

struct RgcnParams {
  Tensor root;                    // d x d'
  std::vector<Tensor> relations;  // one d x d' matrix per relation type

  Index input_dim() const { return root.rows(); }
  Index output_dim() const { return root.cols(); }
  void collect(const std::string& prefix, NamedTensors& out);
  void collect(const std::string& prefix, ConstNamedTensors& out) const;
};

RgcnParams make_rgcn_params(Index input_dim, Index output_dim, int relations, Rng& rng);

/// x'_i = z_i Theta_root + sum_r sum_{j in N_r(i)} z_j Theta_r / |N_r(i)|,
/// with N_r(i) the sources of edges into i typed r (a repeated edge counts
/// once per occurrence).
Var rgcn_forward(const Var& z, const ConversationGraph& graph, const RgcnParams& params,
                 const Pass& pass);

/// Per-head projections stored as column blocks of width `head_width`.
struct GraphTransformerParams {
  int heads = 1;
  Index head_width = 0;
  Tensor w_self;   // W1: d' x kH
  Tensor w_value;  // W2: d' x kH
  Tensor w_query;  // W3: d' x kH
  Tensor w_key;    // W4: d' x kH
  Tensor w_out;    // kH x d''

  Index input_dim() const { return w_self.rows(); }
  Index output_dim() const { return w_out.cols(); }
  void collect(const std::string& prefix, NamedTensors& out);
  void collect(const std::string& prefix, ConstNamedTensors& out) const;
};

/// Head width is ceil(output_dim / heads).
GraphTransformerParams make_graph_transformer_params(Index input_dim, Index output_dim, int heads,
                                                     Rng& rng);

/// Per head: h_i = x_i W1 + sum_{j in N(i)} alpha_ij x_j W2 with
/// alpha_i. = softmax_j((x_i W3) . (x_j W4) / sqrt(k)) over in-neighbours N(i),
/// relation types ignored. Heads are concatenated and projected by w_out.
/// When `attention` is given, one n x n alpha map per head is appended.
Var graph_transformer_forward(const Var& x, const ConversationGraph& graph,
                              const GraphTransformerParams& params, const Pass& pass,
                              std::vector<Matrix>* attention = nullptr);

/// The "without GNN" path: identity.
inline Var bypass_gnn(const Var& z) { return z; }

}  // namespace cogmen
