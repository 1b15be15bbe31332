#pragma once

#include <functional>
#include <vector>

#include "semtrack/rng.hpp"
#include "semtrack/tensor.hpp"

namespace semtrack {

// y = W x + b with W: [out, in], b: [out].
struct LinearParams {
  Tensor weight;
  Tensor bias;

  std::size_t in_features() const { return weight.extent(1); }
  std::size_t out_features() const { return weight.extent(0); }
};

// weight: [out, in, k, k] with k odd, bias: [out].
struct ConvParams {
  Tensor weight;
  Tensor bias;

  std::size_t out_channels() const { return weight.extent(0); }
  std::size_t in_channels() const { return weight.extent(1); }
  std::size_t kernel() const { return weight.extent(2); }
};

// Multi-head self-attention over d-wide tokens. Each projection is d x d;
// head h owns rows [h*d/heads, (h+1)*d/heads) of the Q, K and V projections.
struct MhaParams {
  std::size_t heads = 1;
  LinearParams query;
  LinearParams key;
  LinearParams value;
  LinearParams output;

  std::size_t width() const { return query.weight.extent(1); }
};

// Shared two-layer MLP C -> hidden -> C with ReLU between.
struct ChannelAttentionParams {
  LinearParams reduce;
  LinearParams expand;
};

// 7x7 convolution from the [avg, max] channel pair to one gate channel.
struct SpatialAttentionParams {
  ConvParams conv;
};

struct AsppParams {
  ConvParams pointwise;             // 1x1 branch
  std::vector<ConvParams> dilated;  // 3x3 branches, one per rate
  std::vector<int> rates{1, 2, 3};
  ConvParams pooled;                // 1x1 on the global average, broadcast
  ConvParams merge;                 // 1x1 over the concatenated branches

  std::size_t branch_channels() const { return pointwise.out_channels(); }
  std::size_t out_channels() const { return merge.out_channels(); }
};

// Initialisation: every weight and bias ~ U(-a, a), a = sqrt(1 / fan_in).
LinearParams init_linear(std::size_t in, std::size_t out, RngStream& rng);
ConvParams init_conv(std::size_t in, std::size_t out, std::size_t kernel, RngStream& rng);
MhaParams init_mha(std::size_t width, std::size_t heads, RngStream& rng);
// Hidden width is max(1, channels / reduction).
ChannelAttentionParams init_channel_attention(std::size_t channels, RngStream& rng, std::size_t reduction = 16);
SpatialAttentionParams init_spatial_attention(RngStream& rng, std::size_t kernel = 7);
AsppParams init_aspp(std::size_t in, std::size_t branch, std::size_t out, RngStream& rng,
                     std::vector<int> rates = {1, 2, 3});

void zero(LinearParams& p);
void zero(ConvParams& p);
LinearParams identity_linear(std::size_t width);

double sigmoid(double x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);

// x: [in] or [L, in]; applies to every row.
Tensor linear(const Tensor& x, const LinearParams& p);

// Cross-correlation with reflect-101 padding; preserves H and W.
Tensor conv2d(const Tensor& x, const ConvParams& p, int dilation = 1);

// Max-subtracted softmax along one axis.
Tensor softmax(const Tensor& x, std::size_t axis);

// x: [L, d] tokens.
Tensor mha(const Tensor& x, const MhaParams& p);
// x: [C, H, W] attended as H*W tokens of width C.
Tensor mha_spatial(const Tensor& x, const MhaParams& p);

// Gate vector s = sigmoid(MLP(avgpool x) + MLP(maxpool x)), length C.
Tensor channel_gate(const Tensor& x, const ChannelAttentionParams& p);
Tensor channel_attention(const Tensor& x, const ChannelAttentionParams& p);
// Gate map m = sigmoid(conv([mean_c x, max_c x])), shape [1, H, W].
Tensor spatial_gate(const Tensor& x, const SpatialAttentionParams& p);
Tensor spatial_attention(const Tensor& x, const SpatialAttentionParams& p);

Tensor aspp(const Tensor& x, const AsppParams& p);

using ScalarFunction = std::function<double(const Tensor&)>;

// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
Tensor finite_diff(const ScalarFunction& f, const Tensor& x, double eps);

}  // namespace semtrack
