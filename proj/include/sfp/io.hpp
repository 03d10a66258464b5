// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

// File formats: PFM float maps, PNG via libpng, and the stack directory
// layout (one 16-bit PNG per polarizer angle plus meta.json).

#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sfp/error.hpp"
#include "sfp/fresnel.hpp"
#include "sfp/image.hpp"
#include "sfp/pol_core.hpp"

namespace sfp::io {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// PFM

namespace detail {

static_assert(std::endian::native == std::endian::little, "PFM writer assumes a little-endian host");

inline void write_pfm_raw(const fs::path& path, int width, int height, int channels,
                          const std::vector<float>& rows_top_down) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
    out << (channels == 3 ? "PF" : "Pf") << "\n" << width << " " << height << "\n-1.0\n";
    const std::size_t row_len = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
    for (int y = height - 1; y >= 0; --y) {
        out.write(reinterpret_cast<const char*>(rows_top_down.data() + static_cast<std::size_t>(y) * row_len),
                  static_cast<std::streamsize>(row_len * sizeof(float)));
    }
    if (!out) throw InputError("failed writing '" + path.string() + "'");
}

struct PfmData {
    int width = 0, height = 0, channels = 0;
    std::vector<float> rows_top_down;
};

inline PfmData read_pfm_raw(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::string magic;
    PfmData d;
    double scale = 0.0;
    in >> magic >> d.width >> d.height >> scale;
    if (!in || (magic != "Pf" && magic != "PF") || d.width <= 0 || d.height <= 0 || scale == 0.0) {
        throw InputError("'" + path.string() + "' is not a valid PFM file");
    }
    in.get();  // single whitespace after the scale
    d.channels = magic == "PF" ? 3 : 1;
    const std::size_t row_len = static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.channels);
    d.rows_top_down.resize(row_len * static_cast<std::size_t>(d.height));
    for (int y = d.height - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(d.rows_top_down.data() + static_cast<std::size_t>(y) * row_len),
                static_cast<std::streamsize>(row_len * sizeof(float)));
    }
    if (!in) throw InputError("'" + path.string() + "' is truncated");
    if (scale > 0.0) {  // big-endian payload
        for (float& f : d.rows_top_down) {
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            u = __builtin_bswap32(u);
            std::memcpy(&f, &u, 4);
        }
    }
    return d;
}

}  // namespace detail

inline void write_pfm(const fs::path& path, const Plane& plane) {
    std::vector<float> data(plane.size());
    for (std::size_t i = 0; i < plane.size(); ++i) data[i] = static_cast<float>(plane[i]);
    detail::write_pfm_raw(path, plane.width(), plane.height(), 1, data);
}

inline void write_pfm(const fs::path& path, const Image<Vec3>& field) {
    std::vector<float> data(field.size() * 3);
    for (std::size_t i = 0; i < field.size(); ++i) {
        data[3 * i] = static_cast<float>(field[i].x);
        data[3 * i + 1] = static_cast<float>(field[i].y);
        data[3 * i + 2] = static_cast<float>(field[i].z);
    }
    detail::write_pfm_raw(path, field.width(), field.height(), 3, data);
}

inline Plane read_pfm(const fs::path& path) {
    const auto d = detail::read_pfm_raw(path);
    if (d.channels != 1) throw InputError("'" + path.string() + "' has 3 channels, expected 1");
    Plane out(d.width, d.height);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = d.rows_top_down[i];
    return out;
}

inline Image<Vec3> read_pfm3(const fs::path& path) {
    const auto d = detail::read_pfm_raw(path);
    if (d.channels != 3) throw InputError("'" + path.string() + "' has 1 channel, expected 3");
    Image<Vec3> out(d.width, d.height);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = {d.rows_top_down[3 * i], d.rows_top_down[3 * i + 1], d.rows_top_down[3 * i + 2]};
    }
    return out;
}

// ---------------------------------------------------------------------------
// PNG

struct PngImage {
    int width = 0, height = 0, channels = 0, bit_depth = 0;
    std::vector<std::uint16_t> samples;  // row-major, interleaved channels
};

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

[[noreturn]] inline void png_error_handler(png_structp png, png_const_charp msg) {
    auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
    if (buf) *buf = msg;
    png_longjmp(png, 1);
}

inline void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace detail

inline void write_png(const fs::path& path, const PngImage& img) {
    if (img.channels != 1 && img.channels != 3) throw InputError("write_png: 1 or 3 channels supported");
    if (img.bit_depth != 8 && img.bit_depth != 16) throw InputError("write_png: bit depth must be 8 or 16");
    std::unique_ptr<std::FILE, detail::FileCloser> file(std::fopen(path.string().c_str(), "wb"));
    if (!file) throw InputError("cannot open '" + path.string() + "' for writing");
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_handler,
                                              detail::png_warning_handler);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw InputError("write_png: libpng initialization failed");
    }
    const std::size_t bytes = img.bit_depth == 16 ? 2 : 1;
    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * img.channels * bytes;
    std::vector<unsigned char> buffer(row_bytes * static_cast<std::size_t>(img.height));
    for (std::size_t i = 0; i < img.samples.size(); ++i) {
        if (bytes == 2) {
            buffer[2 * i] = static_cast<unsigned char>(img.samples[i] >> 8);
            buffer[2 * i + 1] = static_cast<unsigned char>(img.samples[i] & 0xff);
        } else {
            buffer[i] = static_cast<unsigned char>(img.samples[i]);
        }
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + row_bytes * y;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw InputError("write_png '" + path.string() + "': " + err);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), img.bit_depth,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline PngImage read_png(const fs::path& path) {
    std::unique_ptr<std::FILE, detail::FileCloser> file(std::fopen(path.string().c_str(), "rb"));
    if (!file) throw InputError("cannot open '" + path.string() + "'");
    unsigned char sig[8] = {};
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw InputError("'" + path.string() + "' is not a PNG file");
    }
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_handler,
                                             detail::png_warning_handler);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InputError("read_png: libpng initialization failed");
    }
    PngImage img;
    std::vector<unsigned char> buffer;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InputError("read_png '" + path.string() + "': " + err);
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    img.bit_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    buffer.resize(row_bytes * static_cast<std::size_t>(img.height));
    rows.resize(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + row_bytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
    img.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        img.samples[i] = img.bit_depth == 16 ? static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1])
                                             : buffer[i];
    }
    return img;
}

/// Writes a [0, 1] plane as grayscale; values are clamped and rounded.
inline void write_gray_png(const fs::path& path, const Plane& plane, int bit_depth = 16) {
    const double full = bit_depth == 16 ? 65535.0 : 255.0;
    PngImage img{plane.width(), plane.height(), 1, bit_depth, std::vector<std::uint16_t>(plane.size())};
    for (std::size_t i = 0; i < plane.size(); ++i) {
        img.samples[i] = static_cast<std::uint16_t>(std::lround(std::clamp(plane[i], 0.0, 1.0) * full));
    }
    write_png(path, img);
}

/// Reads a grayscale PNG of any supported depth into [0, 1].
inline Plane read_gray_png(const fs::path& path) {
    const PngImage img = read_png(path);
    if (img.channels != 1) throw InputError("'" + path.string() + "' is not a grayscale PNG");
    const double full = img.bit_depth == 16 ? 65535.0 : 255.0;
    Plane out(img.width, img.height);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.samples[i] / full;
    return out;
}

inline void write_mask_png(const fs::path& path, const Mask& mask) {
    PngImage img{mask.width(), mask.height(), 1, 8, std::vector<std::uint16_t>(mask.size())};
    for (std::size_t i = 0; i < mask.size(); ++i) img.samples[i] = mask[i] ? 255 : 0;
    write_png(path, img);
}

inline Mask read_mask_png(const fs::path& path) {
    const PngImage img = read_png(path);
    if (img.channels != 1) throw InputError("'" + path.string() + "' is not a grayscale PNG");
    Mask out(img.width, img.height);
    const unsigned half = img.bit_depth == 16 ? 32768u : 128u;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.samples[i] >= half;
    return out;
}

/// Sign plane as 8-bit gray: 0 for -1, 255 for +1.
inline void write_sign_png(const fs::path& path, const Image<std::int8_t>& sign) {
    PngImage img{sign.width(), sign.height(), 1, 8, std::vector<std::uint16_t>(sign.size())};
    for (std::size_t i = 0; i < sign.size(); ++i) img.samples[i] = sign[i] > 0 ? 255 : 0;
    write_png(path, img);
}

/// Normal field visualization: RGB = (n + 1) / 2.
inline void write_normals_png(const fs::path& path, const Image<Vec3>& normals) {
    PngImage img{normals.width(), normals.height(), 3, 8, std::vector<std::uint16_t>(normals.size() * 3)};
    auto q = [](double v) { return static_cast<std::uint16_t>(std::lround(std::clamp(0.5 * (v + 1.0), 0.0, 1.0) * 255.0)); };
    for (std::size_t i = 0; i < normals.size(); ++i) {
        img.samples[3 * i] = q(normals[i].x);
        img.samples[3 * i + 1] = q(normals[i].y);
        img.samples[3 * i + 2] = q(normals[i].z);
    }
    write_png(path, img);
}

// ---------------------------------------------------------------------------
// JSON files

inline json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("'" + path.string() + "': " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Stack directory

inline std::string stack_file_name(double angle) {
    const long deg = std::lround(rad2deg(wrap_pi(angle)));
    char buf[32];
    std::snprintf(buf, sizeof buf, "I%03ld.png", deg);
    return buf;
}

inline void write_stack(const fs::path& dir, const PolarizationStack& stack) {
    fs::create_directories(dir);
    json angles = json::array();
    for (std::size_t k = 0; k < stack.count(); ++k) {
        write_gray_png(dir / stack_file_name(stack.angles()[k]), stack.image(k), 16);
        angles.push_back(rad2deg(stack.angles()[k]));
    }
    write_json(dir / "meta.json",
               json{{"width", stack.width()}, {"height", stack.height()}, {"angles_deg", angles}, {"bit_depth", 16}});
}

inline PolarizationStack read_stack(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InputError("stack directory '" + dir.string() + "' does not exist");
    const json meta = read_json(dir / "meta.json");
    std::vector<double> angles;
    int width = 0, height = 0;
    try {
        width = meta.at("width").get<int>();
        height = meta.at("height").get<int>();
        for (const auto& a : meta.at("angles_deg")) angles.push_back(deg2rad(a.get<double>()));
    } catch (const json::exception& e) {
        throw InputError("meta.json: " + std::string(e.what()));
    }
    std::vector<Plane> planes;
    for (double a : angles) {
        Plane p = read_gray_png(dir / stack_file_name(a));
        if (p.width() != width || p.height() != height) {
            throw InputError("stack plane " + stack_file_name(a) + " does not match meta.json dimensions");
        }
        planes.push_back(std::move(p));
    }
    return PolarizationStack(std::move(angles), std::move(planes));
}

}  // namespace sfp::io
