#pragma once

#include <string>
#include <vector>

#include "cogmen/serialize.hpp"
#include "cogmen/tensor.hpp"

namespace cogmen {

/// One post-norm transformer block. Per-head projections are stored as
/// column blocks: head h of wq is columns [h*k, (h+1)*k).
struct EncoderLayerParams {
  Tensor wq, wk, wv;  // d x kH
  Tensor wo;          // kH x d
  Tensor w1;          // d x m
  Tensor w2;          // m x d
  Tensor gamma1, beta1, gamma2, beta2;  // 1 x d
};

struct EncoderParams {
  int heads = 1;
  Index head_width = 0;
  Index model_dim = 0;
  Index ffn_width = 0;
  double eps = 1e-5;
  std::vector<EncoderLayerParams> layers;

  void collect(const std::string& prefix, NamedTensors& out);
  void collect(const std::string& prefix, ConstNamedTensors& out) const;
};

/// Head width is d / heads when divisible, ceil(d / heads) otherwise.
/// ffn_width 0 selects 4d.
EncoderParams make_encoder_params(Index model_dim, int layers, int heads, Index ffn_width, Rng& rng,
                                  double eps = 1e-5);

/// Transformer encoder without positional information:
///   alpha_h = softmax(Q_h K_h^T / sqrt(k)),  U' = [alpha_h V_h]_h W_o,
///   U = LN(X + U'),  Z = LN(U + ReLU(U W1) W2),
/// stacked over all layers. Dropout follows W_o and the FFN output.
/// When `attention` is given, the alpha maps are appended layer by layer,
/// head by head.
Var encode(const Var& x, const EncoderParams& params, const Pass& pass,
           std::vector<Matrix>* attention = nullptr);

/// Attention maps of an inference pass, ordered layer-major then head.
std::vector<Matrix> attention_maps(const Matrix& x, const EncoderParams& params);

}  // namespace cogmen
