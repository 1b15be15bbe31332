#include "semtrack/verify/fusion_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace semtrack::verify {

namespace {

using Vec = std::vector<double>;

struct Map {
  std::size_t c = 0, h = 0, w = 0;
  Vec v;
  double& operator()(std::size_t ci, std::size_t y, std::size_t x) { return v[(ci * h + y) * w + x]; }
  double operator()(std::size_t ci, std::size_t y, std::size_t x) const { return v[(ci * h + y) * w + x]; }
};

Map as_map(const Tensor& t) { return {t.extent(0), t.extent(1), t.extent(2), t.values()}; }

std::size_t fold(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  if (i >= n) i = period - i;
  return static_cast<std::size_t>(i);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// rows x in  ->  rows x out
Vec dense(const Vec& x, std::size_t rows, const LinearParams& p) {
  const auto out = p.weight.extent(0), in = p.weight.extent(1);
  Vec y(rows * out);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < out; ++o) {
      double s = p.bias[o];
      for (std::size_t i = 0; i < in; ++i) s += p.weight[o * in + i] * x[r * in + i];
      y[r * out + o] = s;
    }
  return y;
}

Map conv(const Map& x, const ConvParams& p, long dilation) {
  const auto co = p.weight.extent(0), ci = p.weight.extent(1), k = p.weight.extent(2);
  const long r = static_cast<long>(k / 2);
  Map y{co, x.h, x.w, Vec(co * x.h * x.w)};
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t yy = 0; yy < x.h; ++yy)
      for (std::size_t xx = 0; xx < x.w; ++xx) {
        double s = p.bias[o];
        for (std::size_t c = 0; c < ci; ++c)
          for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
              const auto sy = fold(static_cast<long>(yy) + (static_cast<long>(a) - r) * dilation, static_cast<long>(x.h));
              const auto sx = fold(static_cast<long>(xx) + (static_cast<long>(b) - r) * dilation, static_cast<long>(x.w));
              s += p.weight[((o * ci + c) * k + a) * k + b] * x(c, sy, sx);
            }
        y(o, yy, xx) = s;
      }
  return y;
}

// Self-attention over the H*W positions of a map, tokens of width C.
Map attend(const Map& x, const MhaParams& p) {
  const std::size_t L = x.h * x.w, d = x.c, heads = p.heads, dh = d / heads;
  Vec tokens(L * d);
  for (std::size_t t = 0; t < L; ++t)
    for (std::size_t c = 0; c < d; ++c) tokens[t * d + c] = x.v[c * L + t];
  const Vec q = dense(tokens, L, p.query), k = dense(tokens, L, p.key), v = dense(tokens, L, p.value);
  Vec mixed(L * d, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < L; ++i) {
      Vec logits(L);
      for (std::size_t j = 0; j < L; ++j) {
        double s = 0.0;
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) s += q[i * d + c] * k[j * d + c];
        logits[j] = s / std::sqrt(static_cast<double>(dh));
      }
      const double top = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (auto& l : logits) z += (l = std::exp(l - top));
      for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < L; ++j) s += logits[j] / z * v[j * d + c];
        mixed[i * d + c] = s;
      }
    }
  }
  const Vec o = dense(mixed, L, p.output);
  Map y{x.c, x.h, x.w, Vec(x.v.size())};
  for (std::size_t t = 0; t < L; ++t)
    for (std::size_t c = 0; c < d; ++c) y.v[c * L + t] = o[t * d + c];
  return y;
}

Map channel_branch(const Map& x, const ChannelAttentionParams& p) {
  const std::size_t L = x.h * x.w;
  Vec avg(x.c), mx(x.c);
  for (std::size_t c = 0; c < x.c; ++c) {
    double s = 0.0, m = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < L; ++t) {
      s += x.v[c * L + t];
      m = std::max(m, x.v[c * L + t]);
    }
    avg[c] = s / static_cast<double>(L);
    mx[c] = m;
  }
  auto mlp = [&](const Vec& in) {
    Vec hidden = dense(in, 1, p.reduce);
    for (auto& e : hidden) e = std::max(0.0, e);
    return dense(hidden, 1, p.expand);
  };
  const Vec a = mlp(avg), b = mlp(mx);
  Map y = x;
  for (std::size_t c = 0; c < x.c; ++c) {
    const double g = logistic(a[c] + b[c]);
    for (std::size_t t = 0; t < L; ++t) y.v[c * L + t] = g * x.v[c * L + t];
  }
  return y;
}

Map spatial_branch(const Map& x, const SpatialAttentionParams& p) {
  const std::size_t L = x.h * x.w;
  Map pooled{2, x.h, x.w, Vec(2 * L)};
  for (std::size_t t = 0; t < L; ++t) {
    double s = 0.0, m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < x.c; ++c) {
      s += x.v[c * L + t];
      m = std::max(m, x.v[c * L + t]);
    }
    pooled.v[t] = s / static_cast<double>(x.c);
    pooled.v[L + t] = m;
  }
  const Map g = conv(pooled, p.conv, 1);
  Map y = x;
  for (std::size_t c = 0; c < x.c; ++c)
    for (std::size_t t = 0; t < L; ++t) y.v[c * L + t] = logistic(g.v[t]) * x.v[c * L + t];
  return y;
}

Map hadamard(const Map& a, const Map& b) {
  Map y = a;
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] *= b.v[i];
  return y;
}

Map stack(const std::vector<Map>& parts) {
  Map y{0, parts[0].h, parts[0].w, {}};
  for (const auto& p : parts) {
    y.c += p.c;
    y.v.insert(y.v.end(), p.v.begin(), p.v.end());
  }
  return y;
}

Tensor to_tensor(const Map& m) { return Tensor({m.c, m.h, m.w}, m.v); }

}  // namespace

Tensor oracle_adapter(const Tensor& x_q_t, const Tensor& x_s_t, const AdapterParams& p) {
  const Map x_q = as_map(x_q_t), x_s = as_map(x_s_t);
  // Shared channel and spatial attention on both inputs.
  const Map f_qc = channel_branch(x_q, p.casa.channel);
  const Map f_qs = spatial_branch(x_q, p.casa.spatial);
  const Map f_sc = channel_branch(x_s, p.casa.channel);
  const Map f_ss = spatial_branch(x_s, p.casa.spatial);
  const Map f_c = attend(hadamard(f_qc, f_sc), p.channel_mha);
  const Map f_s = attend(hadamard(f_qs, f_ss), p.spatial_mha);
  Map f_as = x_s;
  for (std::size_t i = 0; i < f_as.v.size(); ++i) f_as.v[i] = x_s.v[i] + (f_c.v[i] + f_s.v[i]);
  return to_tensor(f_as);
}

Tensor oracle_vsfm(const Tensor& x_as_t, const Tensor& x_q_t, const VsfmParams& p) {
  const Map x_as = as_map(x_as_t);
  const std::size_t C = x_as.c, H = x_as.h, W = x_as.w, L = H * W;
  const std::size_t N = x_q_t.extent(0), M = x_q_t.extent(1);

  // Reshape(X_q): project each query to C channels, query n -> cell n.
  const Vec projected = dense(x_q_t.values(), N, p.query_projection);
  Map x_rq{C, H, W, Vec(C * L, 0.0)};
  for (std::size_t n = 0; n < std::min(N, L); ++n)
    for (std::size_t c = 0; c < C; ++c) x_rq.v[c * L + n] = projected[n * C + c];

  // ASPP over the concatenated attended maps.
  const Map cat = stack({attend(x_as, p.semantic_mha), attend(x_rq, p.query_mha)});
  std::vector<Map> branches{conv(cat, p.aspp.pointwise, 1)};
  for (std::size_t r = 0; r < p.aspp.rates.size(); ++r) branches.push_back(conv(cat, p.aspp.dilated[r], p.aspp.rates[r]));
  Map mean{cat.c, 1, 1, Vec(cat.c)};
  for (std::size_t c = 0; c < cat.c; ++c) {
    double s = 0.0;
    for (std::size_t t = 0; t < L; ++t) s += cat.v[c * L + t];
    mean.v[c] = s / static_cast<double>(L);
  }
  const Map pooled = conv(mean, p.aspp.pooled, 1);
  Map spread{pooled.c, H, W, Vec(pooled.c * L)};
  for (std::size_t c = 0; c < pooled.c; ++c)
    for (std::size_t t = 0; t < L; ++t) spread.v[c * L + t] = pooled.v[c];
  branches.push_back(spread);
  const Map f_sq = conv(stack(branches), p.aspp.merge, 1);

  // Gate: channel softmax of a 1x1 convolution.
  const Map logits = conv(f_sq, p.gate_conv, 1);
  Map f_s = logits;
  for (std::size_t t = 0; t < L; ++t) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < C; ++c) top = std::max(top, logits.v[c * L + t]);
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) z += std::exp(logits.v[c * L + t] - top);
    for (std::size_t c = 0; c < C; ++c) f_s.v[c * L + t] = std::exp(logits.v[c * L + t] - top) / z;
  }

  // Convex blend with w = F_s.
  Map f_f = x_as;
  for (std::size_t i = 0; i < f_f.v.size(); ++i) f_f.v[i] = f_s.v[i] * x_as.v[i] + (1.0 - f_s.v[i]) * x_rq.v[i];

  // Attention, three conv+ReLU layers, fully connected to N x M.
  Map h = attend(f_f, p.fused_mha);
  for (const auto& layer : p.extractor.convs) {
    h = conv(h, layer, 1);
    for (auto& e : h.v) e = std::max(0.0, e);
  }
  const Vec f_e = dense(h.v, 1, p.extractor.fc);

  Tensor f_fq({N, M});
  for (std::size_t i = 0; i < N * M; ++i) f_fq[i] = x_q_t[i] + f_e[i];
  return f_fq;
}

}  // namespace semtrack::verify
