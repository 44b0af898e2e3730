#pragma once

#include <cstddef>
#include <vector>

#include "pinr/autodiff.hpp"

namespace pinr {

/// Pixel grid with values in [0,1], row-major with interleaved channels.
struct ImageField {
    int height = 0;
    int width = 0;
    int channels = 1;  // 1 or 3
    std::vector<double> values;

    ImageField() = default;
    ImageField(int h, int w, int c, double fill = 0.0);

    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
    double& at(int y, int x, int ch = 0) { return values[index(y, x, ch)]; }
    double at(int y, int x, int ch = 0) const { return values[index(y, x, ch)]; }
    std::size_t index(int y, int x, int ch) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(channels) +
               static_cast<std::size_t>(ch);
    }

    /// Throws InputError unless dims are positive, channels is 1 or 3 and all
    /// values are finite and inside [0,1].
    void validate() const;

    /// Channel average (returns a copy for grayscale input).
    ImageField to_gray() const;

    /// Sub-rectangle [y0, y0+h) x [x0, x0+w).
    ImageField crop(int y0, int x0, int h, int w) const;

    /// Values as a (H*W) x channels matrix, pixel rows in raster order.
    Matrix as_matrix() const;
    static ImageField from_matrix(const Matrix& m, int height, int width);

    bool operator==(const ImageField&) const = default;
};

/// Normalized coordinate of pixel index i along an axis of length n:
/// -1 + 2i/(n-1), or 0 when n == 1.
double normalized_coord(int i, int n);

/// (H*W) x 2 matrix of (x, y) coordinates in [-1,1]^2, raster order; x runs
/// along the width.
Matrix grid_coords(int height, int width);

/// Map [0,1] values to [-1,1] training targets and back (clamped).
Matrix to_signed(const Matrix& unit);
Matrix to_unit(const Matrix& signed_values);

}  // namespace pinr
