#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semtrack/array_store.hpp"
#include "semtrack/nncore.hpp"

namespace semtrack {

// Channel + spatial attention pair. One instance is applied to both the query
// map and the semantic map.
struct CasaParams {
  ChannelAttentionParams channel;
  SpatialAttentionParams spatial;
};

struct CasaOutput {
  Tensor channel;
  Tensor spatial;
};

CasaOutput casa(const Tensor& x, const CasaParams& p);

// Adapter ------------------------------------------------------------------

struct AdapterParams {
  CasaParams casa;
  MhaParams channel_mha;
  MhaParams spatial_mha;
};

struct AdapterActivations {
  Tensor x_q;
  Tensor x_s;
  Tensor f_qc, f_qs, f_sc, f_ss;
  Tensor f_c, f_s;
  Tensor f_as;
};

AdapterParams init_adapter_params(std::size_t channels, std::size_t heads, RngStream& rng);

// F_c = MHA(F_qc * F_sc), F_s = MHA(F_qs * F_ss), F_as = X_s + (F_c + F_s).
AdapterActivations adapter_trace(const Tensor& x_q, const Tensor& x_s, const AdapterParams& p);
Tensor adapter_forward(const Tensor& x_q, const Tensor& x_s, const AdapterParams& p);

// Query reshaping ----------------------------------------------------------

// Projects each M-wide query row to C channels and scatters row n onto grid
// cell n (row-major). Rows beyond H*W are dropped; when that happens and
// scores are given, the highest-scoring rows are kept, in stable descending
// score order.
Tensor reshape_queries(const Tensor& x_q, std::size_t height, std::size_t width, const LinearParams& projection,
                       std::span<const double> scores = {});

// Inverse of the scatter for the first `count` cells: [count, C].
Tensor gather_queries(const Tensor& grid, std::size_t count);

// VSFM ---------------------------------------------------------------------

// 3 x (3x3 conv, channel halving floored at 1, ReLU) then one fully connected
// layer to N*M, reshaped to [N, M].
struct FeatureExtractorParams {
  std::array<ConvParams, 3> convs;
  LinearParams fc;
  std::size_t queries = 0;
  std::size_t query_dim = 0;
};

struct VsfmParams {
  MhaParams semantic_mha;
  MhaParams query_mha;
  LinearParams query_projection;  // [C, M]
  AsppParams aspp;                // 2C -> C'
  ConvParams gate_conv;           // 1x1, C' -> C
  MhaParams fused_mha;
  FeatureExtractorParams extractor;
};

struct FusionDims {
  std::size_t channels = 4;
  std::size_t height = 3;
  std::size_t width = 3;
  std::size_t queries = 5;
  std::size_t query_dim = 4;
  std::size_t heads = 4;
};

VsfmParams init_vsfm_params(const FusionDims& dims, RngStream& rng);

struct VsfmOptions {
  // Replaces the softmax gate with a constant (test hook for the endpoints).
  std::optional<double> gate_override;
  std::span<const double> query_scores;
};

struct VsfmActivations {
  Tensor x_as;
  Tensor x_q;
  Tensor x_rq;
  Tensor f_sq;
  Tensor f_s;
  Tensor w;
  Tensor f_f;
  Tensor f_m;
  Tensor f_e;
  Tensor f_fq;
};

// Inputs of the three ReLUs.
std::vector<Tensor> extractor_preactivations(const Tensor& x, const FeatureExtractorParams& p);
// Output of the last conv + ReLU layer, before the fully connected layer.
Tensor extractor_hidden(const Tensor& x, const FeatureExtractorParams& p);
Tensor feature_extractor(const Tensor& x, const FeatureExtractorParams& p);
// True when some layer has no positive pre-activation, which makes the
// extractor output constant around x.
bool extractor_inactive(const Tensor& x, const FeatureExtractorParams& p);

VsfmActivations vsfm_trace(const Tensor& x_as, const Tensor& x_q, const VsfmParams& p,
                           const VsfmOptions& options = {});
Tensor vsfm_forward(const Tensor& x_as, const Tensor& x_q, const VsfmParams& p, const VsfmOptions& options = {});

// Full pipeline: X_q is scattered onto the grid with the VSFM query
// projection, adapted against X_s, then fused.
struct FusionParams {
  AdapterParams adapter;
  VsfmParams vsfm;
};

FusionParams init_fusion_params(const FusionDims& dims, RngStream& rng);
Tensor fuse_queries(const Tensor& x_q, const Tensor& x_s, const FusionParams& p,
                    std::span<const double> query_scores = {});

// Residual-branch switches used by tests and the selftest.
void zero_adapter_projections(AdapterParams& p);
void zero_extractor_output(VsfmParams& p);

// Gradient verification ------------------------------------------------------

struct GradCheckReport {
  std::string input;               // which input tensor
  Tensor gradient;                 // at the base epsilon
  // |D(e)-D(e/2)| / |D(e/2)-D(e/4)|, norms over the elements outside `kinked`.
  double richardson_ratio = 0.0;
  bool finite = true;
  std::vector<std::size_t> non_finite;  // element indices with NaN/Inf
  // Elements whose difference stencil changes the sign of a ReLU input.
  std::vector<std::size_t> kinked;
};

enum class GradProbe { AdapterOutput, VsfmOutput };

// Finite-difference gradients of sum(F_as) w.r.t. (X_q, X_s) or of sum(F_fq)
// w.r.t. (X_as, X_q). Kinked elements are only reported for the VSFM probe.
std::vector<GradCheckReport> grad_check_fusion(GradProbe probe, const Tensor& first, const Tensor& second,
                                               const AdapterParams* adapter, const VsfmParams* vsfm,
                                               double eps = 5e-2);

// Serialization into the named-array container.
void store_params(ArrayStore& store, const AdapterParams& p, const std::string& prefix = "adapter.");
void store_params(ArrayStore& store, const VsfmParams& p, const std::string& prefix = "vsfm.");
AdapterParams load_adapter_params(const ArrayStore& store, const std::string& prefix = "adapter.");
VsfmParams load_vsfm_params(const ArrayStore& store, const std::string& prefix = "vsfm.");

}  // namespace semtrack
