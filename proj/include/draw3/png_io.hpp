#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "draw3/render.hpp"

namespace draw3 {

struct Image8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgba;  // 4 bytes per pixel, row-major
};

Image8 quantize(const RenderedView& view);

// 8-bit RGBA PNG. Byte-deterministic for a given image.
std::vector<std::uint8_t> encode_png(const Image8& image);
Image8 decode_png(const std::vector<std::uint8_t>& bytes);

void export_png(const RenderedView& view, const std::string& path);

// view_{pose_index:02}.png
std::string view_filename(int pose_index);

}  // namespace draw3
