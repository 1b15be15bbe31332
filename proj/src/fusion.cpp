#include "semtrack/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace semtrack {

CasaOutput casa(const Tensor& x, const CasaParams& p) {
  return {channel_attention(x, p.channel), spatial_attention(x, p.spatial)};
}

AdapterParams init_adapter_params(std::size_t channels, std::size_t heads, RngStream& rng) {
  AdapterParams p;
  p.casa.channel = init_channel_attention(channels, rng);
  p.casa.spatial = init_spatial_attention(rng);
  p.channel_mha = init_mha(channels, heads, rng);
  p.spatial_mha = init_mha(channels, heads, rng);
  return p;
}

AdapterActivations adapter_trace(const Tensor& x_q, const Tensor& x_s, const AdapterParams& p) {
  require_rank(x_q, 3, "adapter X_q");
  require_shape(x_s, x_q.shape(), "adapter X_s");
  AdapterActivations a;
  a.x_q = x_q;
  a.x_s = x_s;
  auto q = casa(x_q, p.casa);
  auto s = casa(x_s, p.casa);
  a.f_qc = std::move(q.channel);
  a.f_qs = std::move(q.spatial);
  a.f_sc = std::move(s.channel);
  a.f_ss = std::move(s.spatial);
  a.f_c = mha_spatial(a.f_qc * a.f_sc, p.channel_mha);
  a.f_s = mha_spatial(a.f_qs * a.f_ss, p.spatial_mha);
  a.f_as = x_s + (a.f_c + a.f_s);
  return a;
}

Tensor adapter_forward(const Tensor& x_q, const Tensor& x_s, const AdapterParams& p) {
  return adapter_trace(x_q, x_s, p).f_as;
}

Tensor reshape_queries(const Tensor& x_q, std::size_t height, std::size_t width, const LinearParams& projection,
                       std::span<const double> scores) {
  require_rank(x_q, 2, "reshape_queries X_q");
  const auto N = x_q.extent(0);
  if (!scores.empty() && scores.size() != N) throw ShapeError("reshape_queries: one score per query expected");
  const auto projected = linear(x_q, projection);
  const auto C = projection.out_features();
  const auto cells = height * width;

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!scores.empty() && N > cells) {
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  }
  Tensor grid({C, height, width});
  for (std::size_t slot = 0; slot < std::min(N, cells); ++slot) {
    const auto row = order[slot];
    for (std::size_t c = 0; c < C; ++c) grid[c * cells + slot] = projected.at(row, c);
  }
  return grid;
}

Tensor gather_queries(const Tensor& grid, std::size_t count) {
  require_rank(grid, 3, "gather_queries");
  const auto C = grid.extent(0), cells = grid.extent(1) * grid.extent(2);
  if (count > cells) throw ShapeError("gather_queries: more rows than grid cells");
  Tensor out({count, C});
  for (std::size_t n = 0; n < count; ++n)
    for (std::size_t c = 0; c < C; ++c) out.at(n, c) = grid[c * cells + n];
  return out;
}

namespace {
std::size_t halved(std::size_t c) { return std::max<std::size_t>(1, c / 2); }
}  // namespace

VsfmParams init_vsfm_params(const FusionDims& d, RngStream& rng) {
  VsfmParams p;
  const auto C = d.channels;
  const auto C2 = 2 * C;
  p.semantic_mha = init_mha(C, d.heads, rng);
  p.query_mha = init_mha(C, d.heads, rng);
  p.query_projection = init_linear(d.query_dim, C, rng);
  p.aspp = init_aspp(C2, C2, C2, rng);
  p.gate_conv = init_conv(C2, C, 1, rng);
  p.fused_mha = init_mha(C, d.heads, rng);
  std::size_t c = C;
  for (auto& conv : p.extractor.convs) {
    conv = init_conv(c, halved(c), 3, rng);
    c = halved(c);
  }
  p.extractor.fc = init_linear(c * d.height * d.width, d.queries * d.query_dim, rng);
  p.extractor.queries = d.queries;
  p.extractor.query_dim = d.query_dim;
  return p;
}

std::vector<Tensor> extractor_preactivations(const Tensor& x, const FeatureExtractorParams& p) {
  std::vector<Tensor> out;
  Tensor h = x;
  for (const auto& conv : p.convs) {
    out.push_back(conv2d(h, conv, 1));
    h = relu(out.back());
  }
  return out;
}

Tensor extractor_hidden(const Tensor& x, const FeatureExtractorParams& p) {
  return relu(extractor_preactivations(x, p).back());
}

bool extractor_inactive(const Tensor& x, const FeatureExtractorParams& p) {
  for (const auto& z : extractor_preactivations(x, p)) {
    if (std::none_of(z.data().begin(), z.data().end(), [](double v) { return v > 0.0; })) return true;
  }
  return false;
}

Tensor feature_extractor(const Tensor& x, const FeatureExtractorParams& p) {
  const auto h = extractor_hidden(x, p);
  const auto flat = h.reshaped({h.size()});
  if (p.fc.in_features() != flat.size() || p.fc.out_features() != p.queries * p.query_dim) {
    throw ShapeError("feature extractor: fully connected layer does not fit " + shape_string(h.shape()) + " -> [" +
                     std::to_string(p.queries) + "x" + std::to_string(p.query_dim) + "]");
  }
  return linear(flat, p.fc).reshaped({p.queries, p.query_dim});
}

VsfmActivations vsfm_trace(const Tensor& x_as, const Tensor& x_q, const VsfmParams& p, const VsfmOptions& options) {
  require_rank(x_as, 3, "vsfm X_as");
  require_rank(x_q, 2, "vsfm X_q");
  if (x_q.extent(0) != p.extractor.queries || x_q.extent(1) != p.extractor.query_dim) {
    throw ShapeError("vsfm: X_q " + shape_string(x_q.shape()) + " does not match the configured query shape");
  }
  const auto H = x_as.extent(1), W = x_as.extent(2);
  VsfmActivations a;
  a.x_as = x_as;
  a.x_q = x_q;
  a.x_rq = reshape_queries(x_q, H, W, p.query_projection, options.query_scores);
  require_shape(a.x_rq, x_as.shape(), "vsfm reshaped queries");

  a.f_sq = aspp(concat_channels(mha_spatial(x_as, p.semantic_mha), mha_spatial(a.x_rq, p.query_mha)), p.aspp);
  a.f_s = softmax(conv2d(a.f_sq, p.gate_conv, 1), 0);
  a.w = options.gate_override ? Tensor(a.f_s.shape(), *options.gate_override) : a.f_s;
  require_shape(a.w, x_as.shape(), "vsfm gate");

  a.f_f = Tensor(x_as.shape());
  for (std::size_t i = 0; i < x_as.size(); ++i) a.f_f[i] = a.w[i] * x_as[i] + (1.0 - a.w[i]) * a.x_rq[i];
  a.f_m = mha_spatial(a.f_f, p.fused_mha);
  a.f_e = feature_extractor(a.f_m, p.extractor);
  a.f_fq = x_q + a.f_e;
  return a;
}

Tensor vsfm_forward(const Tensor& x_as, const Tensor& x_q, const VsfmParams& p, const VsfmOptions& options) {
  return vsfm_trace(x_as, x_q, p, options).f_fq;
}

FusionParams init_fusion_params(const FusionDims& dims, RngStream& rng) {
  FusionParams p;
  p.adapter = init_adapter_params(dims.channels, dims.heads, rng);
  p.vsfm = init_vsfm_params(dims, rng);
  return p;
}

Tensor fuse_queries(const Tensor& x_q, const Tensor& x_s, const FusionParams& p, std::span<const double> scores) {
  require_rank(x_s, 3, "fusion X_s");
  const auto grid = reshape_queries(x_q, x_s.extent(1), x_s.extent(2), p.vsfm.query_projection, scores);
  const auto x_as = adapter_forward(grid, x_s, p.adapter);
  VsfmOptions options;
  options.query_scores = scores;
  return vsfm_forward(x_as, x_q, p.vsfm, options);
}

void zero_adapter_projections(AdapterParams& p) {
  zero(p.channel_mha.output);
  zero(p.spatial_mha.output);
}

void zero_extractor_output(VsfmParams& p) { zero(p.extractor.fc); }

// Gradient check -------------------------------------------------------------

namespace {

using ActivationPattern = std::function<std::vector<char>(const Tensor&)>;

GradCheckReport check_one(const std::string& name, const ScalarFunction& f, const Tensor& x, double eps,
                          const ActivationPattern& pattern = {}) {
  GradCheckReport r;
  r.input = name;
  const auto d1 = finite_diff(f, x, eps);
  const auto d2 = finite_diff(f, x, eps / 2.0);
  const auto d4 = finite_diff(f, x, eps / 4.0);
  r.gradient = d1;
  const auto base = pattern ? pattern(x) : std::vector<char>{};
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(d1[i]) || !std::isfinite(d2[i]) || !std::isfinite(d4[i])) r.non_finite.push_back(i);
    bool smooth = true;
    for (double e : {eps, eps / 2.0, eps / 4.0}) {
      if (!pattern || !smooth) break;
      for (double sign : {1.0, -1.0}) {
        Tensor y = x;
        y[i] += sign * e;
        smooth = smooth && pattern(y) == base;
      }
    }
    if (!smooth) {
      r.kinked.push_back(i);
      continue;
    }
    num += (d1[i] - d2[i]) * (d1[i] - d2[i]);
    den += (d2[i] - d4[i]) * (d2[i] - d4[i]);
  }
  r.finite = r.non_finite.empty();
  r.richardson_ratio = den > 0.0 ? std::sqrt(num / den) : std::nan("");
  return r;
}

std::vector<char> extractor_pattern(const Tensor& x_as, const Tensor& x_q, const VsfmParams& p) {
  std::vector<char> signs;
  for (const auto& z : extractor_preactivations(vsfm_trace(x_as, x_q, p).f_m, p.extractor)) {
    for (double v : z.data()) signs.push_back(v > 0.0);
  }
  return signs;
}

}  // namespace

std::vector<GradCheckReport> grad_check_fusion(GradProbe probe, const Tensor& first, const Tensor& second,
                                               const AdapterParams* adapter, const VsfmParams* vsfm, double eps) {
  std::vector<GradCheckReport> out;
  if (probe == GradProbe::AdapterOutput) {
    if (!adapter) throw ValidationError("grad_check_fusion: adapter parameters required");
    out.push_back(check_one("X_q", [&](const Tensor& x) { return sum(adapter_forward(x, second, *adapter)); }, first, eps));
    out.push_back(check_one("X_s", [&](const Tensor& x) { return sum(adapter_forward(first, x, *adapter)); }, second, eps));
  } else {
    if (!vsfm) throw ValidationError("grad_check_fusion: VSFM parameters required");
    out.push_back(check_one(
        "X_as", [&](const Tensor& x) { return sum(vsfm_forward(x, second, *vsfm)); }, first, eps,
        [&](const Tensor& x) { return extractor_pattern(x, second, *vsfm); }));
    out.push_back(check_one(
        "X_q", [&](const Tensor& x) { return sum(vsfm_forward(first, x, *vsfm)); }, second, eps,
        [&](const Tensor& x) { return extractor_pattern(first, x, *vsfm); }));
  }
  return out;
}

// Serialization --------------------------------------------------------------

namespace {

void put(ArrayStore& s, const std::string& name, const LinearParams& p) {
  s.put(name + ".weight", p.weight);
  s.put(name + ".bias", p.bias);
}
void put(ArrayStore& s, const std::string& name, const ConvParams& p) {
  s.put(name + ".weight", p.weight);
  s.put(name + ".bias", p.bias);
}
void put(ArrayStore& s, const std::string& name, const MhaParams& p) {
  s.put(name + ".heads", Tensor({1}, {static_cast<double>(p.heads)}));
  put(s, name + ".query", p.query);
  put(s, name + ".key", p.key);
  put(s, name + ".value", p.value);
  put(s, name + ".output", p.output);
}

LinearParams get_linear(const ArrayStore& s, const std::string& name) {
  return {s.get(name + ".weight"), s.get(name + ".bias")};
}
ConvParams get_conv(const ArrayStore& s, const std::string& name) {
  return {s.get(name + ".weight"), s.get(name + ".bias")};
}
MhaParams get_mha(const ArrayStore& s, const std::string& name) {
  MhaParams p;
  p.heads = static_cast<std::size_t>(s.get(name + ".heads")[0]);
  p.query = get_linear(s, name + ".query");
  p.key = get_linear(s, name + ".key");
  p.value = get_linear(s, name + ".value");
  p.output = get_linear(s, name + ".output");
  return p;
}

}  // namespace

void store_params(ArrayStore& s, const AdapterParams& p, const std::string& prefix) {
  put(s, prefix + "casa.channel.reduce", p.casa.channel.reduce);
  put(s, prefix + "casa.channel.expand", p.casa.channel.expand);
  put(s, prefix + "casa.spatial.conv", p.casa.spatial.conv);
  put(s, prefix + "channel_mha", p.channel_mha);
  put(s, prefix + "spatial_mha", p.spatial_mha);
}

void store_params(ArrayStore& s, const VsfmParams& p, const std::string& prefix) {
  put(s, prefix + "semantic_mha", p.semantic_mha);
  put(s, prefix + "query_mha", p.query_mha);
  put(s, prefix + "query_projection", p.query_projection);
  put(s, prefix + "aspp.pointwise", p.aspp.pointwise);
  std::vector<double> rates(p.aspp.rates.begin(), p.aspp.rates.end());
  s.put(prefix + "aspp.rates", Tensor({rates.size()}, rates));
  for (std::size_t i = 0; i < p.aspp.dilated.size(); ++i) {
    put(s, prefix + "aspp.dilated" + std::to_string(i), p.aspp.dilated[i]);
  }
  put(s, prefix + "aspp.pooled", p.aspp.pooled);
  put(s, prefix + "aspp.merge", p.aspp.merge);
  put(s, prefix + "gate_conv", p.gate_conv);
  put(s, prefix + "fused_mha", p.fused_mha);
  for (std::size_t i = 0; i < p.extractor.convs.size(); ++i) {
    put(s, prefix + "extractor.conv" + std::to_string(i), p.extractor.convs[i]);
  }
  put(s, prefix + "extractor.fc", p.extractor.fc);
  s.put(prefix + "extractor.query_shape",
        Tensor({2}, {static_cast<double>(p.extractor.queries), static_cast<double>(p.extractor.query_dim)}));
}

AdapterParams load_adapter_params(const ArrayStore& s, const std::string& prefix) {
  AdapterParams p;
  p.casa.channel.reduce = get_linear(s, prefix + "casa.channel.reduce");
  p.casa.channel.expand = get_linear(s, prefix + "casa.channel.expand");
  p.casa.spatial.conv = get_conv(s, prefix + "casa.spatial.conv");
  p.channel_mha = get_mha(s, prefix + "channel_mha");
  p.spatial_mha = get_mha(s, prefix + "spatial_mha");
  return p;
}

VsfmParams load_vsfm_params(const ArrayStore& s, const std::string& prefix) {
  VsfmParams p;
  p.semantic_mha = get_mha(s, prefix + "semantic_mha");
  p.query_mha = get_mha(s, prefix + "query_mha");
  p.query_projection = get_linear(s, prefix + "query_projection");
  p.aspp.pointwise = get_conv(s, prefix + "aspp.pointwise");
  const auto& rates = s.get(prefix + "aspp.rates");
  p.aspp.rates.clear();
  for (std::size_t i = 0; i < rates.size(); ++i) {
    p.aspp.rates.push_back(static_cast<int>(rates[i]));
    p.aspp.dilated.push_back(get_conv(s, prefix + "aspp.dilated" + std::to_string(i)));
  }
  p.aspp.pooled = get_conv(s, prefix + "aspp.pooled");
  p.aspp.merge = get_conv(s, prefix + "aspp.merge");
  p.gate_conv = get_conv(s, prefix + "gate_conv");
  p.fused_mha = get_mha(s, prefix + "fused_mha");
  for (std::size_t i = 0; i < p.extractor.convs.size(); ++i) {
    p.extractor.convs[i] = get_conv(s, prefix + "extractor.conv" + std::to_string(i));
  }
  p.extractor.fc = get_linear(s, prefix + "extractor.fc");
  const auto& qs = s.get(prefix + "extractor.query_shape");
  p.extractor.queries = static_cast<std::size_t>(qs[0]);
  p.extractor.query_dim = static_cast<std::size_t>(qs[1]);
  return p;
}

}  // namespace semtrack
