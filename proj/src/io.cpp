#include "pinr/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pinr/error.hpp"

namespace pinr {

namespace {

struct RawPng {
    int width = 0, height = 0, channels = 0;  // 1 (gray) or 3 (RGB)
    std::vector<std::uint8_t> bytes;
};

// Simplified libpng API: no callbacks, errors come back as a status code.
RawPng read_raw(const std::string& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("cannot read PNG " + path + ": " + image.message);
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&image);
        throw IoError(path + ": 16-bit PNG is not supported (8-bit only)");
    }
    RawPng raw;
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    raw.width = static_cast<int>(image.width);
    raw.height = static_cast<int>(image.height);
    raw.channels = color ? 3 : 1;
    raw.bytes.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, raw.bytes.data(), 0, nullptr))
        throw IoError("cannot decode PNG " + path + ": " + image.message);
    return raw;
}

void write_raw(const std::string& path, int width, int height, int channels, const std::vector<std::uint8_t>& bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr))
        throw IoError("cannot write PNG " + path + ": " + image.message);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

ImageField load_png(const std::string& path, bool gray) {
    const RawPng raw = read_raw(path);
    const int color_channels = raw.channels;
    ImageField img(raw.height, raw.width, color_channels);
    const auto n = static_cast<std::size_t>(raw.channels);
    for (std::size_t p = 0; p < img.pixel_count(); ++p)
        for (int c = 0; c < color_channels; ++c)
            img.values[p * static_cast<std::size_t>(color_channels) + static_cast<std::size_t>(c)] =
                raw.bytes[p * n + static_cast<std::size_t>(c)] / 255.0;
    return gray ? img.to_gray() : img;
}

void save_png(const std::string& path, const ImageField& image) {
    image.validate();
    std::vector<std::uint8_t> bytes(image.values.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image.values[i], 0.0, 1.0) * 255.0));
    write_raw(path, image.width, image.height, image.channels, bytes);
}

void save_mask_png(const std::string& path, const PartitionMask& mask) {
    if (mask.k > 256) throw ConfigError("PNG masks hold at most 256 heads; use the raw format");
    std::vector<std::uint8_t> bytes(mask.map.size() * 3, 0);
    for (std::size_t i = 0; i < mask.map.size(); ++i) bytes[3 * i] = static_cast<std::uint8_t>(mask.map.labels[i]);
    write_raw(path, mask.width(), mask.height(), 3, bytes);
    std::ofstream side(path + ".txt");
    if (!side) throw IoError("cannot write " + path + ".txt");
    side << mask_sidecar(mask);
}

PartitionMask load_mask_png(const std::string& path) {
    const RawPng raw = read_raw(path);
    PartitionMask mask;
    mask.map = LabelMap(raw.height, raw.width);
    const auto n = static_cast<std::size_t>(raw.channels);
    int max_label = 0;
    for (std::size_t i = 0; i < mask.map.size(); ++i) {
        mask.map.labels[i] = raw.bytes[i * n];
        max_label = std::max(max_label, mask.map.labels[i]);
    }
    mask.k = max_label + 1;
    if (std::filesystem::exists(path + ".txt")) apply_sidecar(mask, read_text(path + ".txt"));
    return mask;
}

std::vector<std::string> list_pngs(const std::string& dir) {
    std::vector<std::string> out;
    if (!std::filesystem::is_directory(dir)) throw IoError(dir + " is not a directory");
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

}  // namespace pinr
