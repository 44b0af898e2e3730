#include "pinr/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pinr/error.hpp"

namespace pinr {

ImageField::ImageField(int h, int w, int c, double fill) : height(h), width(w), channels(c) {
    if (h <= 0 || w <= 0) throw InputError("image dimensions must be positive");
    if (c != 1 && c != 3) throw InputError("images have 1 or 3 channels");
    values.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(c), fill);
}

void ImageField::validate() const {
    if (height <= 0 || width <= 0) throw InputError("image dimensions must be positive");
    if (channels != 1 && channels != 3) throw InputError("images have 1 or 3 channels");
    if (values.size() != pixel_count() * static_cast<std::size_t>(channels))
        throw InputError("image buffer size does not match its dimensions");
    for (double v : values)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw InputError("image values must lie in [0,1], found " + std::to_string(v));
}

ImageField ImageField::to_gray() const {
    if (channels == 1) return *this;
    ImageField g(height, width, 1);
    for (std::size_t p = 0; p < pixel_count(); ++p) {
        double s = 0.0;
        for (int c = 0; c < channels; ++c) s += values[p * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)];
        g.values[p] = s / channels;
    }
    return g;
}

ImageField ImageField::crop(int y0, int x0, int h, int w) const {
    if (y0 < 0 || x0 < 0 || h <= 0 || w <= 0 || y0 + h > height || x0 + w > width)
        throw InputError("crop rectangle outside the image");
    ImageField out(h, w, channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c) out.at(y, x, c) = at(y0 + y, x0 + x, c);
    return out;
}

Matrix ImageField::as_matrix() const {
    Matrix m(static_cast<Eigen::Index>(pixel_count()), channels);
    for (std::size_t p = 0; p < pixel_count(); ++p)
        for (int c = 0; c < channels; ++c)
            m(static_cast<Eigen::Index>(p), c) = values[p * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)];
    return m;
}

ImageField ImageField::from_matrix(const Matrix& m, int height, int width) {
    if (m.rows() != static_cast<Eigen::Index>(height) * width) throw InputError("matrix rows do not match H*W");
    ImageField out(height, width, static_cast<int>(m.cols()));
    for (Eigen::Index p = 0; p < m.rows(); ++p)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out.values[static_cast<std::size_t>(p * m.cols() + c)] = m(p, c);
    return out;
}

double normalized_coord(int i, int n) {
    return n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
}

Matrix grid_coords(int height, int width) {
    Matrix c(static_cast<Eigen::Index>(height) * width, 2);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const Eigen::Index r = static_cast<Eigen::Index>(y) * width + x;
            c(r, 0) = normalized_coord(x, width);
            c(r, 1) = normalized_coord(y, height);
        }
    return c;
}

Matrix to_signed(const Matrix& unit) { return (2.0 * unit.array() - 1.0).matrix(); }

Matrix to_unit(const Matrix& signed_values) {
    return ((signed_values.array() + 1.0) * 0.5).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

}  // namespace pinr
