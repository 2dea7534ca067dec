#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "percept/net/model_file.hpp"
#include "percept/vrs/vrs.hpp"

namespace percept::harness {

struct DemoConfig {
    std::string scene = "mixed";
    double threshold = 0.25;  // JND sensitivity t
    std::size_t frames = 4;
    std::uint64_t seed = 1;
    int width = 256;
    int height = 256;
    std::filesystem::path out_dir = "vrs_demo";
};

struct DemoFrame {
    std::size_t tiles = 0;
    std::size_t agree = 0;         // predicted rate == measured-optimal rate
    std::size_t coarser = 0;       // predicted rate cheaper than measured-optimal
    std::size_t finer = 0;
    std::size_t over_threshold = 0;  // tiles whose VRS error reaches the threshold
    double cost_predicted = 0.0;   // shading samples per pixel
    double cost_truth = 0.0;
    double vrs_error = 0.0;        // mean per-pixel error of the VRS render
};

struct DemoSummary {
    std::vector<DemoFrame> frames;
    DemoFrame total;

    std::string to_text() const;
};

/// For each frame: samples a viewpoint pair, predicts per-tile errors,
/// picks rates, renders the VRS image, and compares the decisions with the
/// ones measured errors would give. Writes reference, VRS and rate-map
/// PNGs plus rate-map text per frame and summary.txt.
DemoSummary run_vrs_demo(const net::ModelFile& model, const DemoConfig& cfg);

}  // namespace percept::harness
