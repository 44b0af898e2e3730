#pragma once

// Fitting one coordinate MLP, or one MLP per mask region, to an image.
//
// Targets are the image values mapped to [-1,1]; PSNR is reported on the
// [0,1] scale. Every head trains only on its own pixels with its own Adam
// state and RNG stream (derive_seed(seed, head)); the single-model fit is
// head 0 of a one-region mask, so both paths share one trajectory.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pinr/autodiff.hpp"
#include "pinr/image.hpp"
#include "pinr/partition.hpp"

namespace pinr {

struct FitOptions {
    int steps = 300;
    AdamConfig adam{};
    std::uint64_t seed = 0;
    /// Pixels sampled (with replacement) per step and head; 0 = full batch.
    std::int64_t batch_pixels = 0;
    LossReduction reduction = LossReduction::Mean;
    /// Feed each head coordinates renormalized to its region's bounding box
    /// instead of global image coordinates.
    bool local_coords = false;
    /// Stop a head when its PSNR has not improved by `plateau_db` for
    /// `patience` steps. Disabled when patience == 0.
    int patience = 0;
    double plateau_db = 0.01;
    /// Worker threads for heads; 0 = hardware concurrency.
    int threads = 0;
    /// Compute final SSIM (needs images of at least 11 x 11).
    bool final_ssim = true;
};

struct FitReport {
    /// Per step: combined MSE in [-1,1] target units and PSNR on [0,1]. Both
    /// come from the forward pass of that step, before its update.
    std::vector<double> loss;
    std::vector<double> psnr;
    int steps_run = 0;
    double seconds = 0.0;
    double final_psnr = 0.0;
    double final_ssim = 0.0;
    std::vector<int> head_steps;
    std::vector<double> head_seconds;
    /// Sum over heads and steps of pixels pushed through a forward pass.
    std::int64_t pixel_forwards = 0;
};

struct FitResult {
    std::vector<ParamSet> heads;
    std::vector<ModelConfig> configs;
    PartitionMask mask;
    ImageField reconstruction;
    FitReport report;
};

/// Coordinates for the pixels of `head` (raster order), global or local.
Matrix head_coords(const PartitionMask& mask, int head, bool local_coords);

FitResult fit_single(const ImageField& image, const ModelConfig& config, const FitOptions& options);

/// One config per head, or a single config shared by all heads.
FitResult fit_partitioned(const ImageField& image, const PartitionMask& mask,
                          const std::vector<ModelConfig>& configs, const FitOptions& options);

/// Composes the heads by mask into an image in [0,1].
ImageField predict_partitioned(const std::vector<ParamSet>& heads, const std::vector<ModelConfig>& configs,
                               const PartitionMask& mask, int channels, bool local_coords = false);

/// CSV with header "step,loss,psnr"; PSNR capped at kPsnrCap.
void write_fit_csv(std::ostream& out, const FitReport& report);

}  // namespace pinr
