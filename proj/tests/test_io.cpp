#include <png.h>

#include <filesystem>
#include <random>

#include "doctest.h"
#include "pinr/error.hpp"
#include "pinr/io.hpp"

using namespace pinr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "pinr_test_io";
    fs::create_directories(dir);
    return dir / name;
}

ImageField random_8bit(int h, int w, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ImageField img(h, w, c);
    for (double& v : img.values) v = static_cast<double>(rng() % 256) / 255.0;
    return img;
}

}  // namespace

TEST_CASE("png round trip is lossless for 8-bit data") {
    for (int c : {1, 3}) {
        auto img = random_8bit(13, 17, c, static_cast<std::uint64_t>(c));
        const auto path = scratch("rt" + std::to_string(c) + ".png").string();
        save_png(path, img);
        auto back = load_png(path);
        CHECK(back == img);
    }
}

TEST_CASE("gray flag averages channels") {
    auto img = random_8bit(5, 6, 3, 9);
    const auto path = scratch("rgb.png").string();
    save_png(path, img);
    auto g = load_png(path, true);
    REQUIRE(g.channels == 1);
    for (std::size_t p = 0; p < g.pixel_count(); ++p)
        CHECK(g.values[p] == doctest::Approx((img.values[3 * p] + img.values[3 * p + 1] + img.values[3 * p + 2]) / 3.0));
}

TEST_CASE("16-bit png is rejected") {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = 4;
    image.height = 4;
    image.format = PNG_FORMAT_LINEAR_Y;
    std::vector<png_uint_16> px(16, 1000);
    const auto path = scratch("deep.png").string();
    REQUIRE(png_image_write_to_file(&image, path.c_str(), 0, px.data(), 0, nullptr));
    CHECK_THROWS_AS(load_png(path), IoError);
    CHECK_THROWS_AS(load_png(scratch("missing.png").string()), IoError);
}

TEST_CASE("mask png with sidecar") {
    auto mask = pog(6, 9, {3, 3});
    const auto path = scratch("mask.png").string();
    save_mask_png(path, mask);
    auto back = load_mask_png(path);
    CHECK(back.map == mask.map);
    CHECK(back.k == mask.k);
    CHECK(back.grid.rx == 3);
    CHECK(back.provenance == mask.provenance);
}

TEST_CASE("bundled assets load") {
    const std::string dir = PINR_ASSET_DIR;
    auto photos = list_pngs(dir + "/photos");
    CHECK(photos.size() == 3);
    for (const auto& p : photos) {
        auto img = load_png(p);
        CHECK(img.height <= 256);
        CHECK(img.width <= 256);
    }
    CHECK(list_pngs(dir + "/meta/train").size() == 64);
    CHECK(list_pngs(dir + "/meta/heldout").size() == 16);
    auto toy = load_mask_raw(dir + "/toy_labels.mask");
    CHECK(toy.k == 3);
    CHECK(toy.map.at(1, 1) == 0);
}

TEST_CASE("csv quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
}
