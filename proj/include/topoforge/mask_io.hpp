#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <png.h>

#include "topoforge/errors.hpp"
#include "topoforge/mask.hpp"

namespace topoforge::data {

namespace detail {

inline std::vector<std::uint8_t> mask_rows(const Mask& m) {
    std::vector<std::uint8_t> rows(m.bits().size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = m.bits()[i] ? 255 : 0;
    return rows;
}

inline Mask mask_from_gray(int width, int height, std::span<const std::uint8_t> gray) {
    Mask m(width, height);
    for (std::size_t i = 0; i < gray.size(); ++i) m.bits()[i] = gray[i] >= 128 ? 1 : 0;
    return m;
}

inline Mask read_pgm(const std::string& path, std::ifstream& in) {
    std::string magic;
    in >> magic;
    auto next_token = [&]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw IoError(path + ": truncated PGM header");
    };
    const int width = std::stoi(next_token());
    const int height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (width < 1 || height < 1) throw IoError(path + ": bad PGM dimensions");
    if (maxval < 1 || maxval > 255) throw IoError(path + ": PGM depth beyond 8 bits");

    std::vector<std::uint8_t> gray(std::size_t(width) * height);
    if (magic == "P5") {
        in.get();  // single whitespace after maxval
        in.read(reinterpret_cast<char*>(gray.data()), std::streamsize(gray.size()));
        if (std::size_t(in.gcount()) != gray.size()) throw IoError(path + ": truncated PGM data");
    } else {  // P2
        for (auto& g : gray) {
            int v;
            if (!(in >> v)) throw IoError(path + ": truncated PGM data");
            g = std::uint8_t(v);
        }
    }
    return mask_from_gray(width, height, gray);
}

}  // namespace detail

/// Decodes an 8-bit grayscale PNG held in memory; gray >= 128 becomes
/// foreground. Color, alpha, or 16-bit input is rejected.
inline Mask decode_png(std::span<const std::uint8_t> bytes, const std::string& what = "png buffer") {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw IoError(what + ": not a readable PNG");
    if (image.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_LINEAR)) {
        png_image_free(&image);
        throw IoError(what + ": not an 8-bit grayscale image");
    }
    image.format = PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> gray(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, gray.data(), 0, nullptr))
        throw IoError(what + ": PNG decode failed");
    return detail::mask_from_gray(int(image.width), int(image.height), gray);
}

inline std::vector<std::uint8_t> encode_png(const Mask& m) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = png_uint_32(m.width());
    image.height = png_uint_32(m.height());
    image.format = PNG_FORMAT_GRAY;
    const std::vector<std::uint8_t> rows = detail::mask_rows(m);

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, rows.data(), 0, nullptr))
        throw IoError("PNG encode failed (size pass)");
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, rows.data(), 0, nullptr))
        throw IoError("PNG encode failed");
    out.resize(size);
    return out;
}

/// Reads a mask image: PNG or PGM (P5/P2) by magic bytes, thresholding gray
/// values at 128.
inline Mask read_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in) throw IoError(path + ": empty file");
    in.seekg(0);
    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '2')) return detail::read_pgm(path, in);

    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || bytes[0] != 0x89 || bytes[1] != 'P' || bytes[2] != 'N' || bytes[3] != 'G')
        throw IoError(path + ": not a PNG or PGM mask image");
    return decode_png(bytes, path);
}

/// Writes the mask as an 8-bit grayscale PNG with values 0 and 255; the
/// write/read round trip is lossless.
inline void write_mask(const Mask& m, const std::string& path) {
    const std::vector<std::uint8_t> bytes = encode_png(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError(path + ": write failed");
}

}  // namespace topoforge::data
