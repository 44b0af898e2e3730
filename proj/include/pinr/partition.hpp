#pragma once

// Head-selector masks: every pixel belongs to exactly one head.
//
// Grid partitions assign label floor(x/rx) + floor(y/ry) * ceil(W/rx).
// Segmentation partitions over-segment the image, split regions into
// 4-connected components and then repeatedly merge the smallest region into
// its smallest neighbour until k regions remain.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pinr/image.hpp"

namespace pinr {

/// Integer label image, row-major.
struct LabelMap {
    int height = 0;
    int width = 0;
    std::vector<std::int32_t> labels;

    LabelMap() = default;
    LabelMap(int h, int w, std::int32_t fill = 0);
    std::int32_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
    std::int32_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
    std::size_t size() const { return labels.size(); }
    /// Number of distinct labels.
    int region_count() const;
    bool operator==(const LabelMap&) const = default;
};

struct GridSpec {
    int rx = 1;
    int ry = 1;
};

enum class MaskRule : std::uint8_t { Grid = 0, Segmentation = 1 };

struct PartitionMask {
    LabelMap map;  // labels in 0..k-1
    int k = 0;
    MaskRule rule = MaskRule::Grid;
    GridSpec grid;           // valid when rule == Grid
    std::string provenance;  // human-readable parameters

    int height() const { return map.height; }
    int width() const { return map.width; }
    /// Pixel count per label.
    std::vector<std::int64_t> areas() const;
    /// Raster indices of the pixels of head n.
    std::vector<std::int64_t> pixels_of(int head) const;
    bool operator==(const PartitionMask& o) const { return map == o.map && k == o.k; }
};

/// Single-head mask covering an H x W image.
PartitionMask whole_mask(int height, int width);

/// Regular grid partition. Throws ConfigError when a stride is not in 1..dim.
PartitionMask pog(int height, int width, GridSpec r);

/// Grid spec with `cells_y` x `cells_x` equal cells (ceil division).
GridSpec grid_for_cells(int height, int width, int cells_y, int cells_x);

struct OversegParams {
    /// Merge threshold constant on [0,1] colour distances; <= 0 selects the
    /// scale adaptively so the region count lands in [band_lo, band_hi].
    double scale = 0.0;
    int min_size = 20;
    int band_lo = 50;
    int band_hi = 300;
};

struct OversegResult {
    LabelMap map;
    int regions = 0;
    double scale = 0.0;
    bool degenerate = false;  // constant image, single region
    bool in_band = false;     // region count within [band_lo, band_hi]
};

/// Graph-based over-segmentation (Felzenszwalb-Huttenlocher) on the
/// 4-neighbour pixel graph with Euclidean colour edge weights.
OversegResult overseg(const ImageField& image, const OversegParams& params = {});

/// Every maximal 4-connected component gets its own label; labels are dense
/// and numbered in raster order of first appearance.
LabelMap connected_relabel(const LabelMap& m);

/// Smallest region (ties: lowest label) merges into its smallest 4-adjacent
/// neighbour (ties: lowest label) until k regions remain. Input must be
/// connected-relabeled. Throws InputError when it has fewer than k regions.
PartitionMask greedy_merge(const LabelMap& m, int k);

/// overseg -> connected_relabel -> greedy_merge.
PartitionMask pos(const ImageField& image, int k, const OversegParams& params = {});

/// Cells (rows, cols) of the most square grid with exactly k cells.
std::pair<int, int> near_square_cells(int k);

/// Mask by rule name: "none" (whole image), "pog" (explicit strides when
/// grid.rx and grid.ry are positive, else a near-square grid of k cells) or
/// "pos" (k segmentation regions).
PartitionMask make_mask(const ImageField& image, const std::string& rule, int k, GridSpec grid = {0, 0},
                        const OversegParams& params = {});

/// True when every label's pixel set is 4-connected.
bool labels_connected(const LabelMap& m);

/// Throws ConfigError unless labels are in 0..k-1, every label occurs, and
/// (for segmentation masks) every label is 4-connected.
void validate_mask(const PartitionMask& mask);

// Raw mask format: "MASK", H, W, k as little-endian u32, then H*W u16 labels.
void write_mask_raw(std::ostream& out, const PartitionMask& mask);
PartitionMask read_mask_raw(std::istream& in);
void save_mask_raw(const std::string& path, const PartitionMask& mask);
PartitionMask load_mask_raw(const std::string& path);

/// Sidecar text: key=value lines (k, height, width, rule, provenance).
std::string mask_sidecar(const PartitionMask& mask);
/// Applies a sidecar's rule/provenance/k to a mask read from an image.
void apply_sidecar(PartitionMask& mask, const std::string& text);

}  // namespace pinr
