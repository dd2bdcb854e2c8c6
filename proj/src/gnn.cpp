#include "cogmen/gnn.hpp"

#include <cmath>

namespace cogmen {

void RgcnParams::collect(const std::string& prefix, NamedTensors& out) {
  out.emplace_back(prefix + "root", &root);
  for (std::size_t r = 0; r < relations.size(); ++r)
    out.emplace_back(prefix + "relation." + std::to_string(r), &relations[r]);
}

void RgcnParams::collect(const std::string& prefix, ConstNamedTensors& out) const {
  out.emplace_back(prefix + "root", &root);
  for (std::size_t r = 0; r < relations.size(); ++r)
    out.emplace_back(prefix + "relation." + std::to_string(r), &relations[r]);
}

RgcnParams make_rgcn_params(Index input_dim, Index output_dim, int relations, Rng& rng) {
  if (relations < 1) throw std::invalid_argument("RGCN needs at least one relation type");
  RgcnParams p;
  p.root = xavier_uniform(input_dim, output_dim, rng);
  for (int r = 0; r < relations; ++r) p.relations.push_back(xavier_uniform(input_dim, output_dim, rng));
  return p;
}

Var rgcn_forward(const Var& z, const ConversationGraph& graph, const RgcnParams& params,
                 const Pass& pass) {
  if (graph.num_nodes != z.rows())
    throw DimensionError("rgcn: graph has " + std::to_string(graph.num_nodes) + " nodes, input has " +
                         std::to_string(z.rows()) + " rows");
  if (z.cols() != params.input_dim())
    throw DimensionError("rgcn: input width " + std::to_string(z.cols()) + " vs " +
                         std::to_string(params.input_dim()));
  const auto relation_total = static_cast<int>(params.relations.size());
  const Index n = graph.num_nodes;

  // Per relation: row-normalised in-adjacency, A_r(i, j) = count(j -> i) / |N_r(i)|.
  std::vector<Matrix> adjacency(static_cast<std::size_t>(relation_total));
  for (const Edge& e : graph.edges) {
    if (e.type < 0 || e.type >= relation_total)
      throw std::out_of_range("rgcn: relation id " + std::to_string(e.type) +
                              " outside parameter range [0, " + std::to_string(relation_total) +
                              ")");
    Matrix& a = adjacency[static_cast<std::size_t>(e.type)];
    if (a.size() == 0) a = Matrix::Zero(n, n);
    a(e.dst, e.src) += 1.0;
  }

  Var out = matmul(z, pass.bind(params.root));
  for (int r = 0; r < relation_total; ++r) {
    Matrix& a = adjacency[static_cast<std::size_t>(r)];
    if (a.size() == 0) continue;
    for (Index i = 0; i < n; ++i) {
      const double degree = a.row(i).sum();
      if (degree > 0.0) a.row(i) /= degree;
    }
    const Var messages = matmul(z, pass.bind(params.relations[static_cast<std::size_t>(r)]));
    out = add(out, matmul(Var::constant(std::move(a)), messages));
  }
  return out;
}

namespace {

template <typename Named, typename Params>
void collect_gt(const std::string& prefix, Named& out, Params& p) {
  out.emplace_back(prefix + "w_self", &p.w_self);
  out.emplace_back(prefix + "w_value", &p.w_value);
  out.emplace_back(prefix + "w_query", &p.w_query);
  out.emplace_back(prefix + "w_key", &p.w_key);
  out.emplace_back(prefix + "w_out", &p.w_out);
}

}  // namespace

void GraphTransformerParams::collect(const std::string& prefix, NamedTensors& out) {
  collect_gt(prefix, out, *this);
}

void GraphTransformerParams::collect(const std::string& prefix, ConstNamedTensors& out) const {
  collect_gt(prefix, out, *this);
}

GraphTransformerParams make_graph_transformer_params(Index input_dim, Index output_dim, int heads,
                                                     Rng& rng) {
  if (heads < 1) throw std::invalid_argument("graph transformer needs at least one head");
  GraphTransformerParams p;
  p.heads = heads;
  p.head_width = (output_dim + heads - 1) / heads;
  const Index proj = p.head_width * heads;
  p.w_self = xavier_uniform(input_dim, proj, rng);
  p.w_value = xavier_uniform(input_dim, proj, rng);
  p.w_query = xavier_uniform(input_dim, proj, rng);
  p.w_key = xavier_uniform(input_dim, proj, rng);
  p.w_out = xavier_uniform(proj, output_dim, rng);
  return p;
}

Var graph_transformer_forward(const Var& x, const ConversationGraph& graph,
                              const GraphTransformerParams& params, const Pass& pass,
                              std::vector<Matrix>* attention) {
  if (graph.num_nodes != x.rows())
    throw DimensionError("graph transformer: graph has " + std::to_string(graph.num_nodes) +
                         " nodes, input has " + std::to_string(x.rows()) + " rows");
  if (x.cols() != params.input_dim())
    throw DimensionError("graph transformer: input width " + std::to_string(x.cols()) + " vs " +
                         std::to_string(params.input_dim()));
  const Index k = params.head_width;
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
  const Matrix mask = graph.neighbor_mask();

  const Var self = matmul(x, pass.bind(params.w_self));
  const Var value = matmul(x, pass.bind(params.w_value));
  const Var query = matmul(x, pass.bind(params.w_query));
  const Var key = matmul(x, pass.bind(params.w_key));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(params.heads));
  for (int h = 0; h < params.heads; ++h) {
    const Index at = h * k;
    const Var scores = scale(matmul_nt(slice_cols(query, at, k), slice_cols(key, at, k)), inv_sqrt_k);
    const Var alpha = masked_softmax_rows(scores, mask);
    if (attention != nullptr) attention->push_back(alpha.value());
    heads.push_back(add(slice_cols(self, at, k), matmul(alpha, slice_cols(value, at, k))));
  }
  const Var joined = params.heads == 1 ? heads.front() : concat_cols(heads);
  return matmul(joined, pass.bind(params.w_out));
}

}  // namespace cogmen
