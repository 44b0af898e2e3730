#pragma once

#include "pinr/image.hpp"

namespace pinr {

/// PSNR values written to reports are clamped to this ceiling (exact fits).
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over all pixels and channels of [0,1] images.
/// Returns +infinity for identical images.
double psnr(const ImageField& pred, const ImageField& target);
double psnr_from_mse(double mse);
/// min(psnr, kPsnrCap)
double psnr_capped(double db);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double range = 1.0;
};

/// Mean SSIM over all valid (fully inside) Gaussian windows, averaged over
/// channels. Throws InputError when the image is smaller than the window.
double ssim(const ImageField& pred, const ImageField& target, const SsimParams& params = {});

/// Normalized 1D Gaussian weights of length params.window.
std::vector<double> gaussian_window(const SsimParams& params);

}  // namespace pinr
