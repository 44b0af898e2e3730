#pragma once

// Centered 2D amplitude spectra of whole images and of their grid sub-parts.

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "pinr/image.hpp"
#include "pinr/partition.hpp"

namespace pinr {

struct Spectrum {
    int height = 0;
    int width = 0;
    int x0 = 0;  // source rectangle inside the parent image
    int y0 = 0;
    std::vector<std::complex<double>> bins;  // row-major, zero frequency at (height/2, width/2)

    const std::complex<double>& at(int row, int col) const { return bins[std::size_t(row) * width + col]; }
    double amplitude(int row, int col) const { return std::abs(at(row, col)); }
    int center_row() const { return height / 2; }
    int center_col() const { return width / 2; }
};

/// DFT of the rectangle (x0, y0, w, h) of the image. RGB is averaged to gray
/// first. Bins are shifted so that frequency 0 sits at the center.
Spectrum dft2(const ImageField& image, int x0, int y0, int w, int h);
Spectrum dft2(const ImageField& image);

/// O(N^2) direct summation with the same layout as dft2. Reference only.
Spectrum dft2_direct(const ImageField& image);

enum class Axis { X, Y };

struct SlicePoint {
    int frequency;
    double amplitude;
};

/// Row (Axis::X) or column (Axis::Y) through the zero-frequency bin.
std::vector<SlicePoint> amplitude_slice(const Spectrum& spectrum, Axis axis);

/// Mean amplitude over |f| > n/4 of a slice (upper half of the band up to Nyquist).
double high_band_mean(const std::vector<SlicePoint>& slice, int n);

struct SpectrumRow {
    std::string part;  // "whole" or "part<i>"
    int x0 = 0, y0 = 0, width = 0, height = 0;
    double dc = 0.0;
    double high_x = 0.0;
    double high_y = 0.0;
    // Same values divided by the region's pixel count.
    double dc_norm = 0.0;
    double high_x_norm = 0.0;
    double high_y_norm = 0.0;
};

/// One row for the whole image, then one per grid cell. Throws InputError for
/// a non-grid mask.
std::vector<SpectrumRow> compare_subparts(const ImageField& image, const PartitionMask& mask);

void write_spectrum_csv(std::ostream& out, const std::vector<SpectrumRow>& rows);
void write_slice_csv(std::ostream& out, const std::vector<SlicePoint>& slice);

/// sum |x|^2 and (1 / (H W)) sum |X|^2 of the gray image.
std::pair<double, double> parseval_sides(const ImageField& image);

}  // namespace pinr
