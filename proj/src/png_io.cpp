#include "draw3/png_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace draw3 {
namespace {

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t read_u32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
    put_u32(out, crc);
}

std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& data) {
    uLongf bound = compressBound(static_cast<uLong>(data.size()));
    std::vector<std::uint8_t> out(bound);
    if (compress2(out.data(), &bound, data.data(), static_cast<uLong>(data.size()),
                  Z_DEFAULT_COMPRESSION) != Z_OK)
        throw std::runtime_error("zlib deflate failed");
    out.resize(bound);
    return out;
}

std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* data, std::size_t size,
                                       std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    uLongf out_size = static_cast<uLongf>(expected);
    if (uncompress(out.data(), &out_size, data, static_cast<uLong>(size)) != Z_OK ||
        out_size != expected)
        throw std::runtime_error("zlib inflate failed");
    return out;
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

Image8 quantize(const RenderedView& view) {
    Image8 img;
    img.width = view.width;
    img.height = view.height;
    img.rgba.resize(view.pixels.size());
    for (std::size_t i = 0; i < view.pixels.size(); ++i) {
        double v = view.pixels[i];
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        img.rgba[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return img;
}

std::vector<std::uint8_t> encode_png(const Image8& image) {
    if (image.width <= 0 || image.height <= 0 ||
        image.rgba.size() != static_cast<std::size_t>(image.width) * image.height * 4)
        throw std::invalid_argument("encode_png: inconsistent image dimensions");

    std::vector<std::uint8_t> out(kSignature, kSignature + 8);

    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(image.width));
    put_u32(ihdr, static_cast<std::uint32_t>(image.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(6);  // RGBA
    ihdr.push_back(0);  // deflate
    ihdr.push_back(0);  // filter method 0
    ihdr.push_back(0);  // no interlace
    append_chunk(out, "IHDR", ihdr);

    std::size_t stride = static_cast<std::size_t>(image.width) * 4;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * image.height);
    for (int y = 0; y < image.height; ++y) {
        raw.push_back(0);  // per-scanline filter: none
        const std::uint8_t* row = image.rgba.data() + static_cast<std::size_t>(y) * stride;
        raw.insert(raw.end(), row, row + stride);
    }
    append_chunk(out, "IDAT", zlib_deflate(raw));
    append_chunk(out, "IEND", {});
    return out;
}

Image8 decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
        throw std::runtime_error("decode_png: not a PNG");

    Image8 img;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    while (pos + 12 <= bytes.size()) {
        std::uint32_t len = read_u32(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) throw std::runtime_error("decode_png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const std::uint8_t* data = bytes.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error("decode_png: bad IHDR");
            img.width = static_cast<int>(read_u32(data));
            img.height = static_cast<int>(read_u32(data + 4));
            if (data[8] != 8 || data[9] != 6 || data[12] != 0)
                throw std::runtime_error("decode_png: only 8-bit non-interlaced RGBA supported");
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (img.width <= 0 || img.height <= 0) throw std::runtime_error("decode_png: missing IHDR");

    std::size_t stride = static_cast<std::size_t>(img.width) * 4;
    auto raw = zlib_inflate(idat.data(), idat.size(), (stride + 1) * img.height);
    img.rgba.resize(stride * img.height);
    for (int y = 0; y < img.height; ++y) {
        const std::uint8_t* in = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
        std::uint8_t filter = in[0];
        std::uint8_t* cur = img.rgba.data() + static_cast<std::size_t>(y) * stride;
        const std::uint8_t* prev = y > 0 ? cur - stride : nullptr;
        for (std::size_t x = 0; x < stride; ++x) {
            int a = x >= 4 ? cur[x - 4] : 0;
            int b = prev ? prev[x] : 0;
            int c = (prev && x >= 4) ? prev[x - 4] : 0;
            int v = in[1 + x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw std::runtime_error("decode_png: unknown filter type");
            }
            cur[x] = static_cast<std::uint8_t>(v & 0xff);
        }
    }
    return img;
}

void export_png(const RenderedView& view, const std::string& path) {
    auto bytes = encode_png(quantize(view));
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string view_filename(int pose_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%02d.png", pose_index);
    return buf;
}

}  // namespace draw3
