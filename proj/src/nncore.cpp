#include "semtrack/nncore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semtrack/image.hpp"

namespace semtrack {

LinearParams init_linear(std::size_t in, std::size_t out, RngStream& rng) {
  const double a = std::sqrt(1.0 / static_cast<double>(in));
  LinearParams p;
  p.weight = Tensor::uniform({out, in}, a, rng);
  p.bias = Tensor::uniform({out}, a, rng);
  return p;
}

ConvParams init_conv(std::size_t in, std::size_t out, std::size_t kernel, RngStream& rng) {
  if (kernel % 2 == 0) throw ShapeError("convolution kernels must be odd-sized");
  const double a = std::sqrt(1.0 / static_cast<double>(in * kernel * kernel));
  ConvParams p;
  p.weight = Tensor::uniform({out, in, kernel, kernel}, a, rng);
  p.bias = Tensor::uniform({out}, a, rng);
  return p;
}

MhaParams init_mha(std::size_t width, std::size_t heads, RngStream& rng) {
  if (heads == 0 || width % heads != 0) {
    throw ShapeError("attention width " + std::to_string(width) + " is not divisible by " +
                     std::to_string(heads) + " heads");
  }
  MhaParams p;
  p.heads = heads;
  p.query = init_linear(width, width, rng);
  p.key = init_linear(width, width, rng);
  p.value = init_linear(width, width, rng);
  p.output = init_linear(width, width, rng);
  return p;
}

ChannelAttentionParams init_channel_attention(std::size_t channels, RngStream& rng, std::size_t reduction) {
  const auto hidden = std::max<std::size_t>(1, channels / std::max<std::size_t>(1, reduction));
  return {init_linear(channels, hidden, rng), init_linear(hidden, channels, rng)};
}

SpatialAttentionParams init_spatial_attention(RngStream& rng, std::size_t kernel) {
  return {init_conv(2, 1, kernel, rng)};
}

AsppParams init_aspp(std::size_t in, std::size_t branch, std::size_t out, RngStream& rng, std::vector<int> rates) {
  AsppParams p;
  p.rates = std::move(rates);
  p.pointwise = init_conv(in, branch, 1, rng);
  for (std::size_t i = 0; i < p.rates.size(); ++i) p.dilated.push_back(init_conv(in, branch, 3, rng));
  p.pooled = init_conv(in, branch, 1, rng);
  p.merge = init_conv(branch * (p.rates.size() + 2), out, 1, rng);
  return p;
}

void zero(LinearParams& p) {
  p.weight.fill(0.0);
  p.bias.fill(0.0);
}

void zero(ConvParams& p) {
  p.weight.fill(0.0);
  p.bias.fill(0.0);
}

LinearParams identity_linear(std::size_t width) {
  LinearParams p{Tensor({width, width}), Tensor({width})};
  for (std::size_t i = 0; i < width; ++i) p.weight.at(i, i) = 1.0;
  return p;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid(x[i]);
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::max(0.0, x[i]);
  return out;
}

Tensor linear(const Tensor& x, const LinearParams& p) {
  require_rank(p.weight, 2, "linear weight");
  const auto in = p.in_features(), out = p.out_features();
  require_shape(p.bias, {out}, "linear bias");
  const bool vector = x.rank() == 1;
  if ((vector && x.extent(0) != in) || (!vector && (x.rank() != 2 || x.extent(1) != in))) {
    throw ShapeError("linear: input " + shape_string(x.shape()) + " does not match weight " +
                     shape_string(p.weight.shape()));
  }
  const auto rows = vector ? 1 : x.extent(0);
  Tensor y(vector ? Shape{out} : Shape{rows, out});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = p.bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += p.weight.at(o, i) * x[r * in + i];
      y[r * out + o] = acc;
    }
  }
  return y;
}

Tensor conv2d(const Tensor& x, const ConvParams& p, int dilation) {
  require_rank(x, 3, "conv2d input");
  require_rank(p.weight, 4, "conv2d weight");
  const auto Cin = x.extent(0), H = x.extent(1), W = x.extent(2);
  const auto Cout = p.out_channels(), K = p.kernel();
  if (p.in_channels() != Cin || p.weight.extent(3) != K || K % 2 == 0) {
    throw ShapeError("conv2d: weight " + shape_string(p.weight.shape()) + " does not fit input " +
                     shape_string(x.shape()));
  }
  require_shape(p.bias, {Cout}, "conv2d bias");
  if (dilation < 1) throw ShapeError("conv2d: dilation must be >= 1");

  const int r = static_cast<int>(K / 2);
  // Precomputed reflected source coordinates per output position and tap.
  std::vector<std::size_t> ys(H * K), xs(W * K);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t k = 0; k < K; ++k)
      ys[y * K + k] = static_cast<std::size_t>(
          reflect_index(static_cast<int>(y) + (static_cast<int>(k) - r) * dilation, static_cast<int>(H)));
  for (std::size_t xx = 0; xx < W; ++xx)
    for (std::size_t k = 0; k < K; ++k)
      xs[xx * K + k] = static_cast<std::size_t>(
          reflect_index(static_cast<int>(xx) + (static_cast<int>(k) - r) * dilation, static_cast<int>(W)));

  Tensor out({Cout, H, W});
  for (std::size_t o = 0; o < Cout; ++o) {
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t xx = 0; xx < W; ++xx) {
        double acc = p.bias[o];
        for (std::size_t c = 0; c < Cin; ++c) {
          for (std::size_t ky = 0; ky < K; ++ky) {
            const auto sy = ys[y * K + ky];
            for (std::size_t kx = 0; kx < K; ++kx) {
              acc += p.weight[((o * Cin + c) * K + ky) * K + kx] * x.at(c, sy, xs[xx * K + kx]);
            }
          }
        }
        out.at(o, y, xx) = acc;
      }
    }
  }
  return out;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) throw ShapeError("softmax: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.extent(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.extent(i);
  const auto n = x.extent(axis);
  Tensor out(x.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const auto at = [&](std::size_t k) { return (o * n + k) * inner + in; };
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) m = std::max(m, x[at(k)]);
      double total = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        out[at(k)] = std::exp(x[at(k)] - m);
        total += out[at(k)];
      }
      for (std::size_t k = 0; k < n; ++k) out[at(k)] /= total;
    }
  }
  return out;
}

Tensor mha(const Tensor& x, const MhaParams& p) {
  require_rank(x, 2, "mha input");
  const auto L = x.extent(0), d = x.extent(1);
  if (p.heads == 0 || d % p.heads != 0) throw ShapeError("mha: width not divisible by head count");
  for (const auto* proj : {&p.query, &p.key, &p.value, &p.output}) require_shape(proj->weight, {d, d}, "mha projection");

  const auto q = linear(x, p.query);
  const auto k = linear(x, p.key);
  const auto v = linear(x, p.value);
  const auto dh = d / p.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor heads_out({L, d});
  std::vector<double> scores(L);
  for (std::size_t h = 0; h < p.heads; ++h) {
    const auto c0 = h * dh;
    for (std::size_t i = 0; i < L; ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < L; ++j) {
        double s = 0.0;
        for (std::size_t c = c0; c < c0 + dh; ++c) s += q.at(i, c) * k.at(j, c);
        scores[j] = s * inv_sqrt;
        m = std::max(m, scores[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < L; ++j) {
        scores[j] = std::exp(scores[j] - m);
        total += scores[j];
      }
      for (std::size_t c = c0; c < c0 + dh; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < L; ++j) acc += scores[j] * v.at(j, c);
        heads_out.at(i, c) = acc / total;
      }
    }
  }
  return linear(heads_out, p.output);
}

Tensor mha_spatial(const Tensor& x, const MhaParams& p) {
  require_rank(x, 3, "mha_spatial input");
  return from_tokens(mha(to_tokens(x), p), x.extent(1), x.extent(2));
}

Tensor channel_gate(const Tensor& x, const ChannelAttentionParams& p) {
  require_rank(x, 3, "channel_attention input");
  const auto C = x.extent(0), HW = x.extent(1) * x.extent(2);
  if (p.reduce.in_features() != C || p.expand.out_features() != C ||
      p.expand.in_features() != p.reduce.out_features()) {
    throw ShapeError("channel_attention: MLP does not match " + std::to_string(C) + " channels");
  }
  Tensor avg({C}), mx({C});
  for (std::size_t c = 0; c < C; ++c) {
    double s = 0.0, m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < HW; ++i) {
      s += x[c * HW + i];
      m = std::max(m, x[c * HW + i]);
    }
    avg[c] = s / static_cast<double>(HW);
    mx[c] = m;
  }
  const auto mlp = [&](const Tensor& v) { return linear(relu(linear(v, p.reduce)), p.expand); };
  return sigmoid(mlp(avg) + mlp(mx));
}

Tensor channel_attention(const Tensor& x, const ChannelAttentionParams& p) {
  const auto s = channel_gate(x, p);
  const auto HW = x.extent(1) * x.extent(2);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = s[i / HW] * x[i];
  return out;
}

Tensor spatial_gate(const Tensor& x, const SpatialAttentionParams& p) {
  require_rank(x, 3, "spatial_attention input");
  if (p.conv.in_channels() != 2 || p.conv.out_channels() != 1) {
    throw ShapeError("spatial_attention: conv must map 2 channels to 1");
  }
  const auto C = x.extent(0), H = x.extent(1), W = x.extent(2), HW = H * W;
  Tensor pooled({2, H, W});
  for (std::size_t i = 0; i < HW; ++i) {
    double s = 0.0, m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < C; ++c) {
      s += x[c * HW + i];
      m = std::max(m, x[c * HW + i]);
    }
    pooled[i] = s / static_cast<double>(C);
    pooled[HW + i] = m;
  }
  return sigmoid(conv2d(pooled, p.conv));
}

Tensor spatial_attention(const Tensor& x, const SpatialAttentionParams& p) {
  const auto m = spatial_gate(x, p);
  const auto HW = x.extent(1) * x.extent(2);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = m[i % HW] * x[i];
  return out;
}

Tensor aspp(const Tensor& x, const AsppParams& p) {
  require_rank(x, 3, "aspp input");
  if (p.dilated.size() != p.rates.size()) throw ShapeError("aspp: one dilated branch per rate expected");
  const auto H = x.extent(1), W = x.extent(2);
  if (H == 0 || W == 0) throw ShapeError("aspp: empty spatial extent");

  Tensor branches = conv2d(x, p.pointwise, 1);
  for (std::size_t i = 0; i < p.rates.size(); ++i) {
    branches = concat_channels(branches, conv2d(x, p.dilated[i], p.rates[i]));
  }
  // Global average pool -> 1x1 conv -> broadcast over H x W.
  Tensor mean({x.extent(0), 1, 1});
  for (std::size_t c = 0; c < x.extent(0); ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < H * W; ++i) s += x[c * H * W + i];
    mean[c] = s / static_cast<double>(H * W);
  }
  const auto pooled = conv2d(mean, p.pooled, 1);
  Tensor broadcast({pooled.extent(0), H, W});
  for (std::size_t c = 0; c < pooled.extent(0); ++c)
    for (std::size_t i = 0; i < H * W; ++i) broadcast[c * H * W + i] = pooled[c];
  branches = concat_channels(branches, broadcast);
  return conv2d(branches, p.merge, 1);
}

Tensor finite_diff(const ScalarFunction& f, const Tensor& x, double eps) {
  if (!(eps > 0.0)) throw ValidationError("finite_diff: eps must be positive");
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace semtrack
