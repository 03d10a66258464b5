// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sfp/error.hpp"

namespace sfp {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

inline constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Dense row-major 2-D grid. Pixel (x, y) is column x of row y.
template <class T>
class Image {
  public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(static_cast<std::size_t>(checked_area(width, height)), fill) {}

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    [[nodiscard]] std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    std::span<T> pixels() { return data_; }
    std::span<const T> pixels() const { return data_; }
    std::span<T> row(int y) { return std::span<T>(data_).subspan(index(0, y), static_cast<std::size_t>(width_)); }
    std::span<const T> row(int y) const {
        return std::span<const T>(data_).subspan(index(0, y), static_cast<std::size_t>(width_));
    }

    template <class U>
    [[nodiscard]] bool same_shape(const Image<U>& other) const {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Image&, const Image&) = default;

  private:
    static long long checked_area(int width, int height) {
        if (width < 0 || height < 0) throw InputError("image dimensions must be non-negative");
        return static_cast<long long>(width) * height;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using Plane = Image<double>;
using Mask = Image<std::uint8_t>;

template <class A, class B>
void require_same_shape(const Image<A>& a, const Image<B>& b, const std::string& what) {
    if (!a.same_shape(b)) {
        throw InputError(what + ": shape mismatch (" + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                         " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
    }
}

/// Mask with a `border`-pixel frame cleared.
inline Mask erode_border(const Mask& mask, int border) {
    Mask out = mask;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (x < border || y < border || x >= mask.width() - border || y >= mask.height() - border) out(x, y) = 0;
        }
    }
    return out;
}

inline std::size_t count(const Mask& mask) {
    std::size_t n = 0;
    for (auto v : mask.pixels()) n += v != 0;
    return n;
}

}  // namespace sfp
