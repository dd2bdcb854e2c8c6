#include "cogmen/encoder.hpp"

#include <cmath>

namespace cogmen {

namespace {

template <typename Named, typename Layers>
void collect_layers(const std::string& prefix, Named& out, Layers& layers) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = prefix + std::to_string(l) + ".";
    auto& layer = layers[l];
    out.emplace_back(p + "wq", &layer.wq);
    out.emplace_back(p + "wk", &layer.wk);
    out.emplace_back(p + "wv", &layer.wv);
    out.emplace_back(p + "wo", &layer.wo);
    out.emplace_back(p + "ffn.w1", &layer.w1);
    out.emplace_back(p + "ffn.w2", &layer.w2);
    out.emplace_back(p + "norm1.gamma", &layer.gamma1);
    out.emplace_back(p + "norm1.beta", &layer.beta1);
    out.emplace_back(p + "norm2.gamma", &layer.gamma2);
    out.emplace_back(p + "norm2.beta", &layer.beta2);
  }
}

}  // namespace

void EncoderParams::collect(const std::string& prefix, NamedTensors& out) {
  collect_layers(prefix, out, layers);
}

void EncoderParams::collect(const std::string& prefix, ConstNamedTensors& out) const {
  collect_layers(prefix, out, layers);
}

EncoderParams make_encoder_params(Index model_dim, int layers, int heads, Index ffn_width, Rng& rng,
                                  double eps) {
  if (model_dim < 1 || layers < 0 || heads < 1)
    throw std::invalid_argument("encoder needs model_dim >= 1, layers >= 0, heads >= 1");
  EncoderParams p;
  p.heads = heads;
  p.head_width = (model_dim + heads - 1) / heads;
  p.model_dim = model_dim;
  p.ffn_width = ffn_width > 0 ? ffn_width : 4 * model_dim;
  p.eps = eps;
  const Index proj = p.head_width * heads;
  for (int l = 0; l < layers; ++l) {
    EncoderLayerParams layer;
    layer.wq = xavier_uniform(model_dim, proj, rng);
    layer.wk = xavier_uniform(model_dim, proj, rng);
    layer.wv = xavier_uniform(model_dim, proj, rng);
    layer.wo = xavier_uniform(proj, model_dim, rng);
    layer.w1 = xavier_uniform(model_dim, p.ffn_width, rng);
    layer.w2 = xavier_uniform(p.ffn_width, model_dim, rng);
    layer.gamma1 = Tensor(Matrix::Ones(1, model_dim));
    layer.beta1 = Tensor(Matrix::Zero(1, model_dim));
    layer.gamma2 = Tensor(Matrix::Ones(1, model_dim));
    layer.beta2 = Tensor(Matrix::Zero(1, model_dim));
    p.layers.push_back(std::move(layer));
  }
  return p;
}

Var encode(const Var& x, const EncoderParams& params, const Pass& pass,
           std::vector<Matrix>* attention) {
  if (x.rows() < 1) throw DimensionError("encode: dialogue has no utterances");
  if (x.cols() != params.model_dim)
    throw DimensionError("encode: input width " + std::to_string(x.cols()) +
                         " does not match encoder dimension " + std::to_string(params.model_dim));
  const Index k = params.head_width;
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
  Var h = x;
  for (const auto& layer : params.layers) {
    const Var q = matmul(h, pass.bind(layer.wq));
    const Var key = matmul(h, pass.bind(layer.wk));
    const Var v = matmul(h, pass.bind(layer.wv));
    std::vector<Var> heads;
    heads.reserve(static_cast<std::size_t>(params.heads));
    for (int head = 0; head < params.heads; ++head) {
      const Index at = head * k;
      const Var scores = scale(matmul_nt(slice_cols(q, at, k), slice_cols(key, at, k)), inv_sqrt_k);
      const Var alpha = softmax_rows(scores);
      if (attention != nullptr) attention->push_back(alpha.value());
      heads.push_back(matmul(alpha, slice_cols(v, at, k)));
    }
    Var mixed = params.heads == 1 ? heads.front() : concat_cols(heads);
    mixed = dropout(matmul(mixed, pass.bind(layer.wo)), pass);
    const Var u = layer_norm(add(h, mixed), pass.bind(layer.gamma1), pass.bind(layer.beta1),
                             params.eps);
    Var ffn = matmul(relu(matmul(u, pass.bind(layer.w1))), pass.bind(layer.w2));
    ffn = dropout(ffn, pass);
    h = layer_norm(add(u, ffn), pass.bind(layer.gamma2), pass.bind(layer.beta2), params.eps);
  }
  return h;
}

std::vector<Matrix> attention_maps(const Matrix& x, const EncoderParams& params) {
  Tape tape(Tape::Mode::inference);
  Rng unused(0);
  const Pass pass{tape, false, 0.0, &unused};
  std::vector<Matrix> maps;
  encode(Var::constant(x), params, pass, &maps);
  return maps;
}

}  // namespace cogmen
