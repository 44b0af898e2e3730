#include "pinr/spectra.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <ostream>

#include "pinr/error.hpp"

namespace pinr {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

std::vector<double> gray_region(const ImageField& image, int x0, int y0, int w, int h) {
    if (w < 1 || h < 1) throw InputError("spectrum region is empty");
    if (x0 < 0 || y0 < 0 || x0 + w > image.width || y0 + h > image.height)
        throw InputError("spectrum region lies outside the image");
    std::vector<double> g(std::size_t(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int c = 0; c < image.channels; ++c) s += image.at(y0 + y, x0 + x, c);
            g[std::size_t(y) * w + x] = s / image.channels;
        }
    return g;
}

// Moves bin (r, c) of the unshifted transform to ((r + h/2) % h, (c + w/2) % w).
Spectrum shifted(const std::vector<std::complex<double>>& raw, int w, int h, int x0, int y0) {
    Spectrum s;
    s.width = w;
    s.height = h;
    s.x0 = x0;
    s.y0 = y0;
    s.bins.resize(raw.size());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            s.bins[std::size_t((r + h / 2) % h) * w + (c + w / 2) % w] = raw[std::size_t(r) * w + c];
    return s;
}

}  // namespace

Spectrum dft2(const ImageField& image, int x0, int y0, int w, int h) {
    std::vector<double> in = gray_region(image, x0, y0, w, h);
    const int half = w / 2 + 1;
    std::vector<std::complex<double>> out(std::size_t(h) * half);
    fftw_plan plan;
    {
        std::lock_guard lock(plan_mutex());
        plan = fftw_plan_dft_r2c_2d(h, w, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    // Expand the half spectrum with conjugate symmetry.
    std::vector<std::complex<double>> full(std::size_t(h) * w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            if (c < half)
                full[std::size_t(r) * w + c] = out[std::size_t(r) * half + c];
            else
                full[std::size_t(r) * w + c] = std::conj(out[std::size_t((h - r) % h) * half + (w - c)]);
        }
    return shifted(full, w, h, x0, y0);
}

Spectrum dft2(const ImageField& image) { return dft2(image, 0, 0, image.width, image.height); }

Spectrum dft2_direct(const ImageField& image) {
    const int w = image.width, h = image.height;
    const std::vector<double> g = gray_region(image, 0, 0, w, h);
    std::vector<std::complex<double>> raw(std::size_t(h) * w);
    for (int u = 0; u < h; ++u)
        for (int v = 0; v < w; ++v) {
            std::complex<double> acc = 0.0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    // Reduce the phase index first so the angle stays small.
                    const double a = -2.0 * std::numbers::pi *
                                     (double((u * y) % h) / h + double((v * x) % w) / w);
                    acc += g[std::size_t(y) * w + x] * std::polar(1.0, a);
                }
            raw[std::size_t(u) * w + v] = acc;
        }
    return shifted(raw, w, h, 0, 0);
}

std::vector<SlicePoint> amplitude_slice(const Spectrum& s, Axis axis) {
    std::vector<SlicePoint> out;
    if (axis == Axis::X) {
        for (int c = 0; c < s.width; ++c) out.push_back({c - s.center_col(), s.amplitude(s.center_row(), c)});
    } else {
        for (int r = 0; r < s.height; ++r) out.push_back({r - s.center_row(), s.amplitude(r, s.center_col())});
    }
    return out;
}

double high_band_mean(const std::vector<SlicePoint>& slice, int n) {
    double sum = 0.0;
    int count = 0;
    for (const auto& p : slice)
        if (4 * std::abs(p.frequency) > n) {
            sum += p.amplitude;
            ++count;
        }
    return count == 0 ? 0.0 : sum / count;
}

namespace {

SpectrumRow row_for(const ImageField& image, std::string name, int x0, int y0, int w, int h) {
    const Spectrum s = dft2(image, x0, y0, w, h);
    SpectrumRow r;
    r.part = std::move(name);
    r.x0 = x0;
    r.y0 = y0;
    r.width = w;
    r.height = h;
    r.dc = s.amplitude(s.center_row(), s.center_col());
    r.high_x = high_band_mean(amplitude_slice(s, Axis::X), w);
    r.high_y = high_band_mean(amplitude_slice(s, Axis::Y), h);
    const double area = double(w) * h;
    r.dc_norm = r.dc / area;
    r.high_x_norm = r.high_x / area;
    r.high_y_norm = r.high_y / area;
    return r;
}

}  // namespace

std::vector<SpectrumRow> compare_subparts(const ImageField& image, const PartitionMask& mask) {
    if (mask.rule != MaskRule::Grid) throw InputError("spectral comparison needs a grid (PoG) mask");
    if (mask.map.height != image.height || mask.map.width != image.width)
        throw InputError("mask and image sizes differ");
    std::vector<SpectrumRow> rows{row_for(image, "whole", 0, 0, image.width, image.height)};
    const int cols = (image.width + mask.grid.rx - 1) / mask.grid.rx;
    for (int head = 0; head < mask.k; ++head) {
        const int x0 = (head % cols) * mask.grid.rx;
        const int y0 = (head / cols) * mask.grid.ry;
        const int w = std::min(mask.grid.rx, image.width - x0);
        const int h = std::min(mask.grid.ry, image.height - y0);
        rows.push_back(row_for(image, "part" + std::to_string(head), x0, y0, w, h));
    }
    return rows;
}

void write_spectrum_csv(std::ostream& out, const std::vector<SpectrumRow>& rows) {
    out << "part,x0,y0,width,height,dc,high_x,high_y,dc_norm,high_x_norm,high_y_norm\n";
    out.precision(17);
    for (const auto& r : rows)
        out << r.part << ',' << r.x0 << ',' << r.y0 << ',' << r.width << ',' << r.height << ',' << r.dc << ','
            << r.high_x << ',' << r.high_y << ',' << r.dc_norm << ',' << r.high_x_norm << ',' << r.high_y_norm
            << '\n';
}

void write_slice_csv(std::ostream& out, const std::vector<SlicePoint>& slice) {
    out << "frequency,amplitude\n";
    out.precision(17);
    for (const auto& p : slice) out << p.frequency << ',' << p.amplitude << '\n';
}

std::pair<double, double> parseval_sides(const ImageField& image) {
    const std::vector<double> g = gray_region(image, 0, 0, image.width, image.height);
    double spatial = 0.0;
    for (double v : g) spatial += v * v;
    const Spectrum s = dft2(image);
    double freq = 0.0;
    for (const auto& b : s.bins) freq += std::norm(b);
    return {spatial, freq / (double(image.width) * image.height)};
}

}  // namespace pinr
