#include "pinr/metrics.hpp"

#include <cmath>
#include <limits>

#include "pinr/error.hpp"

namespace pinr {

namespace {

void check_pair(const ImageField& a, const ImageField& b) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels)
        throw InputError("image dimensions differ");
}

// Separable 'valid' filtering of an H x W plane with weights g.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w, const std::vector<double>& g) {
    const int n = static_cast<int>(g.size());
    const int ow = w - n + 1, oh = h - n + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * static_cast<std::size_t>(ow));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += g[static_cast<std::size_t>(k)] * plane[static_cast<std::size_t>(y * w + x + k)];
            rows[static_cast<std::size_t>(y * ow + x)] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * static_cast<std::size_t>(ow));
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += g[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>((y + k) * ow + x)];
            out[static_cast<std::size_t>(y * ow + x)] = s;
        }
    return out;
}

}  // namespace

double psnr_from_mse(double mse) {
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

double psnr_capped(double db) { return db > kPsnrCap ? kPsnrCap : db; }

double psnr(const ImageField& pred, const ImageField& target) {
    check_pair(pred, target);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const double d = pred.values[i] - target.values[i];
        s += d * d;
    }
    return psnr_from_mse(s / static_cast<double>(pred.values.size()));
}

std::vector<double> gaussian_window(const SsimParams& params) {
    std::vector<double> g(static_cast<std::size_t>(params.window));
    const double c = 0.5 * (params.window - 1);
    double sum = 0.0;
    for (int i = 0; i < params.window; ++i) {
        const double d = i - c;
        g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * params.sigma * params.sigma));
        sum += g[static_cast<std::size_t>(i)];
    }
    for (double& v : g) v /= sum;
    return g;
}

double ssim(const ImageField& pred, const ImageField& target, const SsimParams& params) {
    check_pair(pred, target);
    if (pred.height < params.window || pred.width < params.window)
        throw InputError("image is smaller than the SSIM window");
    const auto g = gaussian_window(params);
    const double c1 = (params.k1 * params.range) * (params.k1 * params.range);
    const double c2 = (params.k2 * params.range) * (params.k2 * params.range);
    const int h = pred.height, w = pred.width;
    const std::size_t n = pred.pixel_count();

    double total = 0.0;
    for (int ch = 0; ch < pred.channels; ++ch) {
        std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
        for (std::size_t p = 0; p < n; ++p) {
            a[p] = pred.values[p * static_cast<std::size_t>(pred.channels) + static_cast<std::size_t>(ch)];
            b[p] = target.values[p * static_cast<std::size_t>(pred.channels) + static_cast<std::size_t>(ch)];
            aa[p] = a[p] * a[p];
            bb[p] = b[p] * b[p];
            ab[p] = a[p] * b[p];
        }
        const auto mu_a = filter_valid(a, h, w, g), mu_b = filter_valid(b, h, w, g);
        const auto e_aa = filter_valid(aa, h, w, g), e_bb = filter_valid(bb, h, w, g), e_ab = filter_valid(ab, h, w, g);
        double s = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double va = e_aa[i] - mu_a[i] * mu_a[i];
            const double vb = e_bb[i] - mu_b[i] * mu_b[i];
            const double cov = e_ab[i] - mu_a[i] * mu_b[i];
            s += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
                 ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
        }
        total += s / static_cast<double>(mu_a.size());
    }
    return total / pred.channels;
}

}  // namespace pinr
