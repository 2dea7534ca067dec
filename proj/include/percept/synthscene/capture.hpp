#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "percept/core/keyvalue.hpp"
#include "percept/core/rate.hpp"
#include "percept/metrics/metrics.hpp"
#include "percept/synthscene/render.hpp"
#include "percept/synthscene/viewpoint.hpp"

namespace percept::synthscene {

/// Input planes in storage order.
inline constexpr const char* kChannelOrder = "mask,reprojected_g,diffuse_g,normal_z";
inline constexpr std::size_t kInputChannels = 4;
inline constexpr int kColorChannel = 1;  // green carries most luminance
inline constexpr std::uint32_t kDatasetVersion = 1;

struct CaptureConfig {
    std::string scene = "mixed";
    std::uint64_t scene_seed = 0;  // 0: bundled default
    std::size_t count = 1000;
    int width = 256;
    int height = 256;
    std::size_t w = 16;
    metrics::MetricId metric;
    metrics::JndConfig jnd;
    std::vector<ShadingRate> rates = kPredictedRates;
    std::uint64_t seed = 1;
    ViewpointConfig viewpoint;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
};

struct CapturedSample {
    nn::TensorF input;   // (4, H, W) in kChannelOrder
    nn::TensorF target;  // (R, H/w, W/w) raw metric values
    Camera prev;
    Camera cur;
    std::uint64_t seed = 0;
    std::size_t attempts = 0;
    double unseen = 0.0;  // fraction of geometry pixels with mask 0
};

/// Frames of one viewpoint pair up to the reference render.
struct RenderedPair {
    GBufferFrame prev;
    nn::TensorF prev_image;
    GBufferFrame cur;
    Reprojection reprojection;
    nn::TensorF reference;  // current frame at 1x1
};

RenderedPair render_pair(const Scene& scene, const Camera& prev, const Camera& cur, int width, int height);

/// (4, H, W) network input in kChannelOrder.
nn::TensorF assemble_input(const RenderedPair& frames);

/// Fraction of geometry pixels in the current frame with mask 0.
double unseen_fraction(const RenderedPair& frames);

/// (R, H/w, W/w) tile-mean metric of each rate against the reference.
nn::TensorF measure_rates(const RenderedPair& frames, const std::vector<ShadingRate>& rates, std::size_t w,
                          const metrics::MetricId& metric, const metrics::JndConfig& jnd,
                          const DirectionalLight& light);

/// Renders one pair and derives the network input and per-tile targets.
CapturedSample render_sample(const Scene& scene, const CaptureConfig& cfg, const Camera& prev,
                             const Camera& cur);

/// Sample `index` of a capture; its random stream is derived from
/// (cfg.seed, index) only.
CapturedSample capture_sample(const Scene& scene, const CaptureConfig& cfg, std::size_t index);

struct DatasetManifest {
    std::uint32_t version = kDatasetVersion;
    CaptureConfig config;
    std::uint64_t scene_seed = 0;  // resolved
    std::vector<double> rate_means;
    double mu_y = 0.0;

    KeyValues to_keyvalues() const;
    static DatasetManifest from_keyvalues(const KeyValues& kv);
};

std::filesystem::path sample_dir(const std::filesystem::path& root, std::size_t index);

/// Captures cfg.count samples into out_dir and writes manifest.txt.
DatasetManifest capture_dataset(const CaptureConfig& cfg, const std::filesystem::path& out_dir);

DatasetManifest read_manifest(const std::filesystem::path& dir);

void write_sample(const std::filesystem::path& dir, const CapturedSample& s, std::size_t index,
                  const metrics::MetricId& metric);

/// Reads input.pten, targets.pten and the cameras of one sample.
CapturedSample read_sample(const std::filesystem::path& dir);

KeyValues camera_to_keyvalues(const Camera& c, const std::string& prefix);
Camera camera_from_keyvalues(const KeyValues& kv, const std::string& prefix);

}  // namespace percept::synthscene
