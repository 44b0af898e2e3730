#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "pinr/error.hpp"
#include "pinr/partition.hpp"

using namespace pinr;

namespace {

LabelMap from_rows(std::initializer_list<std::initializer_list<int>> rows) {
    LabelMap m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int y = 0;
    for (const auto& row : rows) {
        int x = 0;
        for (int v : row) m.at(y, x++) = v;
        ++y;
    }
    return m;
}

// Independent recursive flood fill: component id per pixel.
LabelMap flood_oracle(const LabelMap& m) {
    LabelMap out(m.height, m.width, -1);
    int next = 0;
    std::function<void(int, int, int, int)> fill = [&](int y, int x, int src, int id) {
        if (y < 0 || x < 0 || y >= m.height || x >= m.width) return;
        if (out.at(y, x) >= 0 || m.at(y, x) != src) return;
        out.at(y, x) = id;
        fill(y - 1, x, src, id);
        fill(y + 1, x, src, id);
        fill(y, x - 1, src, id);
        fill(y, x + 1, src, id);
    };
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (out.at(y, x) < 0) fill(y, x, m.at(y, x), next++);
    return out;
}

// Same partition up to a bijective renaming of labels.
bool same_partition(const LabelMap& a, const LabelMap& b) {
    if (a.height != b.height || a.width != b.width) return false;
    std::map<int, int> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto [i1, f1] = ab.try_emplace(a.labels[i], b.labels[i]);
        auto [i2, f2] = ba.try_emplace(b.labels[i], a.labels[i]);
        if (i1->second != b.labels[i] || i2->second != a.labels[i]) return false;
    }
    return true;
}

ImageField two_halves(int h, int w, int channels = 1) {
    ImageField img(h, w, channels, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = w / 2; x < w; ++x)
            for (int c = 0; c < channels; ++c) img.at(y, x, c) = 1.0;
    return img;
}

}  // namespace

TEST_CASE("pog: grid arithmetic") {
    auto m = pog(256, 256, {128, 128});
    CHECK(m.k == 4);
    for (auto a : m.areas()) CHECK(a == 16384);
    CHECK(m.map.at(0, 0) == 0);

    auto big = pog(200, 400, {190, 127});
    CHECK(big.map.at(100, 300) == 1);
    CHECK(big.k == 3 * 2);
    CHECK_THROWS_AS(pog(10, 10, {11, 1}), ConfigError);
    CHECK_THROWS_AS(pog(10, 10, {0, 1}), ConfigError);
}

TEST_CASE("pog: per-cell counts match closed form for random sizes") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const int h = 1 + static_cast<int>(rng() % 40), w = 1 + static_cast<int>(rng() % 40);
        const GridSpec r{1 + static_cast<int>(rng() % static_cast<unsigned>(w)),
                         1 + static_cast<int>(rng() % static_cast<unsigned>(h))};
        auto m = pog(h, w, r);
        const int cols = (w + r.rx - 1) / r.rx, rows = (h + r.ry - 1) / r.ry;
        REQUIRE(m.k == cols * rows);
        auto areas = m.areas();
        for (int cy = 0; cy < rows; ++cy)
            for (int cx = 0; cx < cols; ++cx) {
                const std::int64_t expect = std::min(r.rx, w - cx * r.rx) * std::min(r.ry, h - cy * r.ry);
                CHECK(areas[static_cast<std::size_t>(cx + cy * cols)] == expect);
            }
        validate_mask(m);
    }
}

TEST_CASE("connected_relabel") {
    SUBCASE("already connected map keeps its partition") {
        auto m = from_rows({{0, 0, 1}, {0, 1, 1}, {2, 2, 1}});
        CHECK(same_partition(connected_relabel(m), m));
    }
    SUBCASE("diagonal touch splits") {
        auto m = from_rows({{1, 0}, {0, 1}});
        auto r = connected_relabel(m);
        CHECK(r.region_count() == 4);
    }
    SUBCASE("checkerboard: every cell alone") {
        LabelMap m(4, 4);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) m.at(y, x) = (x + y) % 2;
        auto r = connected_relabel(m);
        CHECK(r.region_count() == 16);
        CHECK(same_partition(r, flood_oracle(m)));
    }
    SUBCASE("random maps agree with flood fill") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 200; ++trial) {
            LabelMap m(1 + static_cast<int>(rng() % 12), 1 + static_cast<int>(rng() % 12));
            const int labels = 1 + static_cast<int>(rng() % 4);
            for (auto& l : m.labels) l = static_cast<int>(rng() % static_cast<unsigned>(labels));
            auto r = connected_relabel(m);
            CHECK(same_partition(r, flood_oracle(m)));
            // dense, raster first-appearance numbering
            int next = 0;
            for (auto l : r.labels) {
                CHECK(l <= next);
                if (l == next) ++next;
            }
        }
    }
}

TEST_CASE("greedy_merge: hand-simulated toy maps") {
    // Areas: label 0 -> 2, label 1 -> 6, label 2 -> 8. Region 0 touches both
    // others and joins the smaller one (label 1).
    auto m = from_rows({{1, 1, 1, 2}, {1, 0, 0, 2}, {1, 1, 2, 2}, {2, 2, 2, 2}});
    auto mask = greedy_merge(m, 2);
    auto expected = from_rows({{0, 0, 0, 1}, {0, 0, 0, 1}, {0, 0, 1, 1}, {1, 1, 1, 1}});
    CHECK(mask.map == expected);
    CHECK(mask.areas() == std::vector<std::int64_t>{8, 8});

    // Already k regions: unchanged up to raster renumbering.
    auto same = greedy_merge(m, 3);
    CHECK(same_partition(same.map, m));

    // Ties resolve to the lowest label at both choices.
    auto t = from_rows({{0, 0, 0, 0}, {0, 0, 0, 0}, {1, 1, 2, 2}, {3, 3, 3, 3}});
    // areas: 0 -> 8, 1 -> 2, 2 -> 2, 3 -> 4.
    // step 1: smallest is 1 (tie with 2, lower label); neighbours {0, 2, 3}
    //         areas {8, 2, 4} -> into 2; areas 0:8, 2:4, 3:4.
    // step 2: smallest is 2 (tie with 3, lower label); neighbours {0, 3}
    //         areas {8, 4} -> into 3; areas 0:8, 3:8.
    auto tm = greedy_merge(t, 2);
    auto t_expected = from_rows({{0, 0, 0, 0}, {0, 0, 0, 0}, {1, 1, 1, 1}, {1, 1, 1, 1}});
    CHECK(tm.map == t_expected);

    auto one = greedy_merge(t, 1);
    CHECK(one.map == LabelMap(4, 4, 0));

    CHECK_THROWS_AS(greedy_merge(m, 4), InputError);
}

TEST_CASE("greedy_merge: conserves area, keeps connectivity, deterministic") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 60; ++trial) {
        LabelMap raw(4 + static_cast<int>(rng() % 12), 4 + static_cast<int>(rng() % 12));
        for (auto& l : raw.labels) l = static_cast<int>(rng() % 3);
        auto m = connected_relabel(raw);
        const int n = m.region_count();
        const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
        auto mask = greedy_merge(m, k);
        CHECK(mask.k == k);
        CHECK(mask.map.region_count() == k);
        validate_mask(mask);
        std::int64_t total = 0;
        for (auto a : mask.areas()) total += a;
        CHECK(total == static_cast<std::int64_t>(m.size()));
        CHECK(greedy_merge(m, k).map == mask.map);
        // merged regions are unions of input regions
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = i + 1; j < m.size(); j += 7)
                if (m.labels[i] == m.labels[j]) CHECK(mask.map.labels[i] == mask.map.labels[j]);
    }
}

TEST_CASE("overseg: constant and two-halves images") {
    auto flat = overseg(ImageField(16, 16, 3, 0.4));
    CHECK(flat.regions == 1);
    CHECK(flat.degenerate);

    for (int channels : {1, 3}) {
        auto img = two_halves(8, 8, channels);
        auto seg = overseg(img);
        CHECK(seg.regions == 2);
        CHECK_FALSE(seg.in_band);
        LabelMap halves(8, 8);
        for (int y = 0; y < 8; ++y)
            for (int x = 4; x < 8; ++x) halves.at(y, x) = 1;
        CHECK(same_partition(seg.map, halves));

        auto mask = pos(img, 2);
        CHECK(same_partition(mask.map, halves));
        CHECK(pos(img, 1).map == LabelMap(8, 8, 0));
    }
}

TEST_CASE("overseg: textured image lands in the band") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImageField img(64, 64, 1);
    // blocky random texture
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) img.at(y, x) = 0.0;
    for (int by = 0; by < 64; by += 4)
        for (int bx = 0; bx < 64; bx += 4) {
            const double v = u(rng);
            for (int y = by; y < by + 4; ++y)
                for (int x = bx; x < bx + 4; ++x) img.at(y, x) = v;
        }
    OversegParams p;
    p.min_size = 4;
    auto seg = overseg(img, p);
    CHECK(seg.in_band);
    CHECK(seg.regions >= 50);
    CHECK(seg.regions <= 300);
    CHECK(overseg(img, p).map == seg.map);
    auto mask = pos(img, 9, p);
    validate_mask(mask);
    CHECK(mask.k == 9);
}

TEST_CASE("validate_mask rejects bad masks") {
    auto m = pog(4, 4, {2, 2});
    validate_mask(m);
    auto missing = m;
    missing.k = 5;
    CHECK_THROWS_AS(validate_mask(missing), ConfigError);
    auto split = m;
    split.rule = MaskRule::Segmentation;
    split.map = from_rows({{0, 1, 0, 0}, {1, 1, 0, 0}, {2, 2, 3, 3}, {2, 2, 3, 3}});
    CHECK_THROWS_AS(validate_mask(split), ConfigError);
}

TEST_CASE("raw mask round trip and sidecar") {
    auto m = pog(5, 7, {3, 2});
    std::stringstream buf;
    write_mask_raw(buf, m);
    const std::string bytes = buf.str();
    CHECK(bytes.size() == 16 + 2 * 35);
    CHECK(bytes.substr(0, 4) == "MASK");
    CHECK(static_cast<unsigned char>(bytes[4]) == 5);
    CHECK(static_cast<unsigned char>(bytes[8]) == 7);
    CHECK(static_cast<unsigned char>(bytes[12]) == m.k);
    auto back = read_mask_raw(buf);
    CHECK(back.map == m.map);
    CHECK(back.k == m.k);
    apply_sidecar(back, mask_sidecar(m));
    CHECK(back.rule == MaskRule::Grid);
    CHECK(back.grid.rx == 3);
    CHECK(back.provenance == m.provenance);

    std::stringstream bad("MASQ");
    CHECK_THROWS_AS(read_mask_raw(bad), IoError);
}

TEST_CASE("adaptive pos reaches k on a small smooth image") {
    ImageField img(32, 32, 1);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) img.at(y, x) = (x + y) / 62.0;
    const PartitionMask m = pos(img, 9);
    CHECK(m.k == 9);
    CHECK(labels_connected(m.map));
    OversegParams fixed;
    fixed.scale = 1e4;
    CHECK_THROWS_AS(pos(img, 9, fixed), InputError);
}
