#include "pinr/partition.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "pinr/error.hpp"

namespace pinr {

LabelMap::LabelMap(int h, int w, std::int32_t fill) : height(h), width(w) {
    if (h <= 0 || w <= 0) throw InputError("label map dimensions must be positive");
    labels.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill);
}

int LabelMap::region_count() const {
    std::vector<std::int32_t> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    return static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

std::vector<std::int64_t> PartitionMask::areas() const {
    std::vector<std::int64_t> a(static_cast<std::size_t>(k), 0);
    for (std::int32_t l : map.labels)
        if (l >= 0 && l < k) ++a[static_cast<std::size_t>(l)];
    return a;
}

std::vector<std::int64_t> PartitionMask::pixels_of(int head) const {
    std::vector<std::int64_t> idx;
    for (std::size_t i = 0; i < map.labels.size(); ++i)
        if (map.labels[i] == head) idx.push_back(static_cast<std::int64_t>(i));
    return idx;
}

PartitionMask whole_mask(int height, int width) {
    PartitionMask m;
    m.map = LabelMap(height, width, 0);
    m.k = 1;
    m.rule = MaskRule::Grid;
    m.grid = {width, height};
    m.provenance = "grid rx=" + std::to_string(width) + " ry=" + std::to_string(height);
    return m;
}

PartitionMask pog(int height, int width, GridSpec r) {
    if (height <= 0 || width <= 0) throw ConfigError("image dimensions must be positive");
    if (r.rx < 1 || r.ry < 1 || r.rx > width || r.ry > height)
        throw ConfigError("grid stride (" + std::to_string(r.rx) + "," + std::to_string(r.ry) +
                          ") must lie within the image size (" + std::to_string(width) + "," +
                          std::to_string(height) + ")");
    const int cols = (width + r.rx - 1) / r.rx;
    const int rows = (height + r.ry - 1) / r.ry;
    PartitionMask m;
    m.map = LabelMap(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) m.map.at(y, x) = x / r.rx + (y / r.ry) * cols;
    m.k = cols * rows;
    m.rule = MaskRule::Grid;
    m.grid = r;
    m.provenance = "grid rx=" + std::to_string(r.rx) + " ry=" + std::to_string(r.ry);
    return m;
}

GridSpec grid_for_cells(int height, int width, int cells_y, int cells_x) {
    if (cells_y < 1 || cells_x < 1 || cells_y > height || cells_x > width)
        throw ConfigError("grid cell counts must lie within the image size");
    return {(width + cells_x - 1) / cells_x, (height + cells_y - 1) / cells_y};
}

// ---------------------------------------------------------------------------
// over-segmentation

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1), internal_(n, 0.0) {
        std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
    }
    std::uint32_t find(std::uint32_t a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    // Joins two roots; the lower index stays the root so results are order-stable.
    std::uint32_t join(std::uint32_t a, std::uint32_t b, double w) {
        if (b < a) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        internal_[a] = std::max({internal_[a], internal_[b], w});
        return a;
    }
    std::uint32_t size(std::uint32_t root) const { return size_[root]; }
    double internal(std::uint32_t root) const { return internal_[root]; }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
    std::vector<double> internal_;
};

struct Edge {
    double w;
    std::uint32_t a, b;
};

std::vector<Edge> pixel_edges(const ImageField& img) {
    std::vector<Edge> edges;
    edges.reserve(img.pixel_count() * 2);
    auto dist = [&](int y0, int x0, int y1, int x1) {
        double s = 0.0;
        for (int c = 0; c < img.channels; ++c) {
            const double d = img.at(y0, x0, c) - img.at(y1, x1, c);
            s += d * d;
        }
        return std::sqrt(s);
    };
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto p = static_cast<std::uint32_t>(y * img.width + x);
            if (x + 1 < img.width) edges.push_back({dist(y, x, y, x + 1), p, p + 1});
            if (y + 1 < img.height) edges.push_back({dist(y, x, y + 1, x), p, p + static_cast<std::uint32_t>(img.width)});
        }
    std::sort(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) {
        if (l.w != r.w) return l.w < r.w;
        if (l.a != r.a) return l.a < r.a;
        return l.b < r.b;
    });
    return edges;
}

LabelMap segment_graph(const ImageField& img, const std::vector<Edge>& edges, double scale, int min_size) {
    DisjointSets sets(img.pixel_count());
    for (const Edge& e : edges) {
        const auto a = sets.find(e.a), b = sets.find(e.b);
        if (a == b) continue;
        const double ta = sets.internal(a) + scale / sets.size(a);
        const double tb = sets.internal(b) + scale / sets.size(b);
        if (e.w <= std::min(ta, tb)) sets.join(a, b, e.w);
    }
    for (const Edge& e : edges) {
        const auto a = sets.find(e.a), b = sets.find(e.b);
        if (a != b && (sets.size(a) < static_cast<std::uint32_t>(min_size) ||
                       sets.size(b) < static_cast<std::uint32_t>(min_size)))
            sets.join(a, b, e.w);
    }
    LabelMap m(img.height, img.width);
    std::unordered_map<std::uint32_t, std::int32_t> dense;
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        const auto root = sets.find(static_cast<std::uint32_t>(p));
        auto [it, fresh] = dense.try_emplace(root, static_cast<std::int32_t>(dense.size()));
        m.labels[p] = it->second;
    }
    return m;
}

int band_distance(int count, int lo, int hi) {
    if (count < lo) return lo - count;
    if (count > hi) return count - hi;
    return 0;
}

}  // namespace

OversegResult overseg(const ImageField& image, const OversegParams& params) {
    image.validate();
    if (params.min_size < 1) throw ConfigError("min_size must be >= 1");
    if (params.band_lo < 1 || params.band_hi < params.band_lo) throw ConfigError("invalid region-count band");

    OversegResult result;
    const auto [lo_it, hi_it] = std::minmax_element(image.values.begin(), image.values.end());
    if (*lo_it == *hi_it) {
        result.map = LabelMap(image.height, image.width, 0);
        result.regions = 1;
        result.degenerate = true;
        result.in_band = band_distance(1, params.band_lo, params.band_hi) == 0;
        return result;
    }

    const auto edges = pixel_edges(image);
    auto run = [&](double scale) {
        OversegResult r;
        r.map = segment_graph(image, edges, scale, params.min_size);
        r.regions = r.map.region_count();
        r.scale = scale;
        r.in_band = band_distance(r.regions, params.band_lo, params.band_hi) == 0;
        return r;
    };
    if (params.scale > 0.0) return run(params.scale);

    // Region count falls as the scale grows; bisect in log-scale.
    double lo = 1e-4, hi = 1e4;
    OversegResult best = run(lo);
    for (int iter = 0; iter < 48 && !best.in_band; ++iter) {
        const double mid = std::sqrt(lo * hi);
        OversegResult r = run(mid);
        const int d = band_distance(r.regions, params.band_lo, params.band_hi);
        const int bd = band_distance(best.regions, params.band_lo, params.band_hi);
        if (d < bd) best = r;
        if (r.in_band) break;
        if (r.regions > params.band_hi)
            lo = mid;
        else
            hi = mid;
    }
    return best;
}

// ---------------------------------------------------------------------------
// relabel and merge

LabelMap connected_relabel(const LabelMap& m) {
    LabelMap out(m.height, m.width, -1);
    std::vector<std::size_t> stack;
    std::int32_t next = 0;
    const auto w = static_cast<std::size_t>(m.width);
    for (std::size_t seed = 0; seed < m.size(); ++seed) {
        if (out.labels[seed] >= 0) continue;
        const std::int32_t src = m.labels[seed];
        out.labels[seed] = next;
        stack.assign(1, seed);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const std::size_t x = p % w;
            const std::array<std::size_t, 4> nb{x > 0 ? p - 1 : p, x + 1 < w ? p + 1 : p, p >= w ? p - w : p,
                                                p + w < m.size() ? p + w : p};
            for (std::size_t q : nb)
                if (q != p && out.labels[q] < 0 && m.labels[q] == src) {
                    out.labels[q] = next;
                    stack.push_back(q);
                }
        }
        ++next;
    }
    return out;
}

bool labels_connected(const LabelMap& m) {
    return connected_relabel(m).region_count() == m.region_count();
}

namespace {

// Dense relabel in raster order of first appearance.
LabelMap raster_dense(const LabelMap& m) {
    LabelMap out = m;
    std::unordered_map<std::int32_t, std::int32_t> dense;
    for (auto& l : out.labels) {
        auto [it, fresh] = dense.try_emplace(l, static_cast<std::int32_t>(dense.size()));
        l = it->second;
    }
    return out;
}

}  // namespace

PartitionMask greedy_merge(const LabelMap& m, int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    const int n = m.region_count();
    for (std::int32_t l : m.labels)
        if (l < 0 || l >= n) throw InputError("label map is not densely labeled; run connected_relabel first");
    if (n < k)
        throw InputError("over-segmentation has " + std::to_string(n) + " regions but " + std::to_string(k) +
                         " heads were requested; re-run overseg with finer parameters");

    std::vector<std::int64_t> area(static_cast<std::size_t>(n), 0);
    std::vector<std::set<std::int32_t>> adj(static_cast<std::size_t>(n));
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            const std::int32_t l = m.at(y, x);
            ++area[static_cast<std::size_t>(l)];
            if (x + 1 < m.width && m.at(y, x + 1) != l) {
                adj[static_cast<std::size_t>(l)].insert(m.at(y, x + 1));
                adj[static_cast<std::size_t>(m.at(y, x + 1))].insert(l);
            }
            if (y + 1 < m.height && m.at(y + 1, x) != l) {
                adj[static_cast<std::size_t>(l)].insert(m.at(y + 1, x));
                adj[static_cast<std::size_t>(m.at(y + 1, x))].insert(l);
            }
        }

    std::set<std::pair<std::int64_t, std::int32_t>> by_area;
    for (int l = 0; l < n; ++l) by_area.insert({area[static_cast<std::size_t>(l)], l});
    std::vector<std::int32_t> merged_into(static_cast<std::size_t>(n));
    std::iota(merged_into.begin(), merged_into.end(), 0);

    for (int remaining = n; remaining > k; --remaining) {
        const std::int32_t s = by_area.begin()->second;
        auto& ns = adj[static_cast<std::size_t>(s)];
        if (ns.empty()) throw InputError("region without neighbours; the pixel grid must be connected");
        std::int32_t r = -1;
        for (std::int32_t c : ns)  // ascending label order, so ties keep the lowest label
            if (r < 0 || area[static_cast<std::size_t>(c)] < area[static_cast<std::size_t>(r)]) r = c;

        by_area.erase({area[static_cast<std::size_t>(s)], s});
        by_area.erase({area[static_cast<std::size_t>(r)], r});
        area[static_cast<std::size_t>(r)] += area[static_cast<std::size_t>(s)];
        area[static_cast<std::size_t>(s)] = 0;
        by_area.insert({area[static_cast<std::size_t>(r)], r});
        for (std::int32_t c : ns) {
            adj[static_cast<std::size_t>(c)].erase(s);
            if (c != r) {
                adj[static_cast<std::size_t>(c)].insert(r);
                adj[static_cast<std::size_t>(r)].insert(c);
            }
        }
        ns.clear();
        merged_into[static_cast<std::size_t>(s)] = r;
    }

    LabelMap out = m;
    for (auto& l : out.labels) {
        while (merged_into[static_cast<std::size_t>(l)] != l) l = merged_into[static_cast<std::size_t>(l)];
    }
    PartitionMask mask;
    mask.map = raster_dense(out);
    mask.k = k;
    mask.rule = MaskRule::Segmentation;
    return mask;
}

PartitionMask pos(const ImageField& image, int k, const OversegParams& params) {
    OversegParams p = params;
    OversegResult seg = overseg(image, p);
    LabelMap regions = connected_relabel(seg.map);
    // Adaptive mode on small images: min_size can cap the region count below
    // k, so it is halved until enough regions exist (or it reaches 1).
    while (params.scale <= 0.0 && regions.region_count() < k && p.min_size > 1) {
        p.min_size = std::max(1, p.min_size / 2);
        seg = overseg(image, p);
        regions = connected_relabel(seg.map);
    }
    PartitionMask mask = greedy_merge(regions, k);
    std::ostringstream prov;
    prov << "segmentation k=" << k << " scale=" << seg.scale << " min_size=" << p.min_size
         << " regions=" << seg.regions;
    mask.provenance = prov.str();
    return mask;
}

void validate_mask(const PartitionMask& mask) {
    if (mask.k < 1) throw ConfigError("mask must have at least one head");
    if (mask.map.size() != static_cast<std::size_t>(mask.map.height) * static_cast<std::size_t>(mask.map.width))
        throw ConfigError("mask buffer does not match its dimensions");
    std::vector<bool> seen(static_cast<std::size_t>(mask.k), false);
    for (std::int32_t l : mask.map.labels) {
        if (l < 0 || l >= mask.k) throw ConfigError("mask label " + std::to_string(l) + " outside 0..k-1");
        seen[static_cast<std::size_t>(l)] = true;
    }
    for (int i = 0; i < mask.k; ++i)
        if (!seen[static_cast<std::size_t>(i)]) throw ConfigError("mask head " + std::to_string(i) + " has no pixels");
    if (mask.rule == MaskRule::Segmentation && !labels_connected(mask.map))
        throw ConfigError("segmentation mask has a region that is not 4-connected");
}

// ---------------------------------------------------------------------------
// raw format

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw IoError("truncated mask header");
    return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
}

}  // namespace

void write_mask_raw(std::ostream& out, const PartitionMask& mask) {
    if (mask.k > 65535) throw ConfigError("raw masks hold at most 65535 heads");
    out.write("MASK", 4);
    put_u32(out, static_cast<std::uint32_t>(mask.map.height));
    put_u32(out, static_cast<std::uint32_t>(mask.map.width));
    put_u32(out, static_cast<std::uint32_t>(mask.k));
    for (std::int32_t l : mask.map.labels) {
        const auto v = static_cast<std::uint16_t>(l);
        const std::array<char, 2> b{static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
        out.write(b.data(), 2);
    }
    if (!out) throw IoError("failed to write mask");
}

PartitionMask read_mask_raw(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), "MASK", 4) != 0) throw IoError("not a MASK file");
    const auto h = get_u32(in), w = get_u32(in), k = get_u32(in);
    if (h == 0 || w == 0 || h > 1u << 15 || w > 1u << 15) throw IoError("implausible mask dimensions");
    PartitionMask mask;
    mask.map = LabelMap(static_cast<int>(h), static_cast<int>(w));
    mask.k = static_cast<int>(k);
    for (auto& l : mask.map.labels) {
        std::array<unsigned char, 2> b{};
        if (!in.read(reinterpret_cast<char*>(b.data()), 2)) throw IoError("truncated mask data");
        l = static_cast<std::int32_t>(b[0] | (b[1] << 8));
    }
    return mask;
}

void save_mask_raw(const std::string& path, const PartitionMask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_mask_raw(out, mask);
}

PartitionMask load_mask_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_mask_raw(in);
}

std::string mask_sidecar(const PartitionMask& mask) {
    std::ostringstream s;
    s << "k=" << mask.k << "\nheight=" << mask.map.height << "\nwidth=" << mask.map.width
      << "\nrule=" << (mask.rule == MaskRule::Grid ? "grid" : "segmentation") << '\n';
    if (mask.rule == MaskRule::Grid) s << "rx=" << mask.grid.rx << "\nry=" << mask.grid.ry << '\n';
    s << "provenance=" << mask.provenance << '\n';
    return s.str();
}

void apply_sidecar(PartitionMask& mask, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        try {
            if (key == "k")
                mask.k = std::stoi(value);
            else if (key == "rule")
                mask.rule = value == "grid" ? MaskRule::Grid : MaskRule::Segmentation;
            else if (key == "rx")
                mask.grid.rx = std::stoi(value);
            else if (key == "ry")
                mask.grid.ry = std::stoi(value);
            else if (key == "provenance")
                mask.provenance = value;
        } catch (const std::exception&) {
            throw IoError("malformed mask sidecar line: " + line);
        }
    }
}

std::pair<int, int> near_square_cells(int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    int rows = static_cast<int>(std::sqrt(static_cast<double>(k)));
    while (k % rows != 0) --rows;
    return {rows, k / rows};
}

PartitionMask make_mask(const ImageField& image, const std::string& rule, int k, GridSpec grid,
                        const OversegParams& params) {
    if (rule == "none") return whole_mask(image.height, image.width);
    if (rule == "pog") {
        if (grid.rx > 0 && grid.ry > 0) return pog(image.height, image.width, grid);
        const auto [rows, cols] = near_square_cells(k);
        PartitionMask m = pog(image.height, image.width, grid_for_cells(image.height, image.width, rows, cols));
        if (m.k != k) throw ConfigError("image too small for a " + std::to_string(rows) + "x" + std::to_string(cols) + " grid");
        return m;
    }
    if (rule == "pos") return pos(image, k, params);
    throw ConfigError("unknown partition rule '" + rule + "' (none, pog or pos)");
}

}  // namespace pinr
