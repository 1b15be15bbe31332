#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "semtrack/image.hpp"
#include "semtrack/rng.hpp"

namespace semtrack {

enum class KernelFamily {
  Isotropic,
  Anisotropic,
  GeneralizedIsotropic,
  GeneralizedAnisotropic,
  PlateauIsotropic,
  PlateauAnisotropic,
};

inline constexpr std::size_t kKernelFamilyCount = 6;

const char* to_string(KernelFamily f);
KernelFamily kernel_family_from_string(std::string_view s);
bool is_isotropic(KernelFamily f);

struct KernelShape {
  double sigma_x = 1.0;
  double sigma_y = 1.0;  // ignored by isotropic families
  double theta = 0.0;    // radians; ignored by isotropic families
  double beta = 1.0;     // generalized and plateau families only
};

// Normalized blur kernel. weights is size*size, row-major, rows along y.
struct BlurKernel {
  KernelFamily family = KernelFamily::Isotropic;
  int size = 1;
  KernelShape shape;
  std::vector<double> weights;

  double at(int row, int col) const { return weights[static_cast<std::size_t>(row * size + col)]; }
};

// Radial profiles over the squared Mahalanobis radius rho:
//   gaussian exp(-rho/2), generalized exp(-rho^beta/2), plateau 1/(1+rho^beta).
BlurKernel make_kernel(KernelFamily family, int size, const KernelShape& shape);

// Unit kernel (single 1 at the centre).
BlurKernel delta_kernel(int size);

enum class NoiseKind { Gaussian, Poisson };

const char* to_string(NoiseKind k);
NoiseKind noise_kind_from_string(std::string_view s);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  // Gaussian: standard deviation on the [0,1] scale. Poisson: noise scale.
  double strength = 0.0;
};

struct DegradationStageSample {
  BlurKernel kernel;
  double scale = 1.0;
  ResampleFilter filter = ResampleFilter::Bilinear;
  NoiseSpec noise;
  int jpeg_quality = 30;
};

struct RealRange {
  double lo;
  double hi;
};

struct DegradationConfig {
  std::array<double, kKernelFamilyCount> family_probabilities{0.45, 0.25, 0.12, 0.03, 0.12, 0.03};
  std::vector<int> kernel_sizes{7, 9, 11, 13, 15, 17, 19, 21};
  RealRange sigma{0.2, 3.0};
  RealRange beta_generalized{0.5, 4.0};
  RealRange beta_plateau{1.0, 2.0};
  // Sampled from the open interval.
  RealRange scale{0.15, 1.5};
  double gaussian_noise_probability = 0.5;
  RealRange gaussian_sigma{1.0 / 255.0, 30.0 / 255.0};
  RealRange poisson_scale{0.05, 3.0};
  int jpeg_quality_min = 20;
  int jpeg_quality_max = 40;
  int stages = 2;
  bool restore_original_size = true;
  std::uint64_t seed = 0;

  // Throws ValidationError.
  void validate() const;
};

DegradationStageSample sample_stage(RngStream& rng, const DegradationConfig& config);

struct StageHooks {
  bool skip_jpeg = false;
};

// JPEG_q(clamp(resample_r(img * kernel) + noise)). Noise is drawn from rng.
ImageBuffer apply_stage(const ImageBuffer& img, const DegradationStageSample& sample, RngStream& rng,
                        StageHooks hooks = {});

std::uint64_t stage_stream_key(std::uint64_t seed, std::uint64_t frame_key, int stage);

struct DegradeTrace {
  ImageBuffer image;
  std::vector<DegradationStageSample> stages;
  std::vector<std::uint64_t> stream_keys;
  int jpeg_applications = 0;
};

DegradeTrace degrade_image(const ImageBuffer& img, const DegradationConfig& config, std::uint64_t frame_key);

// Sequence level -----------------------------------------------------------

inline constexpr const char* kManifestName = "degrade_manifest.jsonl";

struct FrameManifestEntry {
  std::int64_t frame = 0;
  bool degraded = false;
  std::string file;  // relative to the image directory
  std::vector<std::uint64_t> stream_keys;
  std::vector<DegradationStageSample> stages;
  std::uint64_t checksum = 0;  // FNV-1a 64 of the written file
};

struct DegradeManifest {
  DegradationConfig config;
  double fraction = 2.0 / 3.0;
  std::string sequence;
  std::int64_t selected = 0;
  std::vector<FrameManifestEntry> frames;
};

// Number of leading frames degraded under the contiguous-prefix policy.
std::int64_t selected_frame_count(double fraction, std::int64_t length);

// Degrades the first floor(fraction*length) frames with frame key = frame
// index, copies every other file byte-for-byte, and writes the manifest to
// <out_dir>/degrade_manifest.jsonl.
DegradeManifest degrade_sequence(const std::filesystem::path& seq_dir, const std::filesystem::path& out_dir,
                                 const DegradationConfig& config, double fraction);

std::string manifest_to_jsonl(const DegradeManifest& manifest);
DegradeManifest manifest_from_jsonl(std::string_view text);

struct ReplayReport {
  std::size_t frames_checked = 0;
  std::vector<std::int64_t> mismatched_frames;
  bool ok() const { return mismatched_frames.empty(); }
};

// Regenerates every degraded frame recorded in the manifest from the source
// sequence and compares checksums (and sampled stages). When out_dir is set
// the regenerated frames are written there.
ReplayReport replay_manifest(const std::filesystem::path& seq_dir, const DegradeManifest& manifest,
                             const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace semtrack
