#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace topoforge {

struct Pixel {
    int x = 0;
    int y = 0;
    friend constexpr bool operator==(const Pixel&, const Pixel&) = default;
};

/// Binary pixel grid, row-major, foreground = 1, background = 0.
class Mask {
public:
    Mask() = default;

    Mask(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height), bits_(checked_size(width, height), fill ? 1 : 0) {}

    static Mask from_bits(int width, int height, std::vector<std::uint8_t> bits) {
        if (bits.size() != checked_size(width, height))
            throw std::invalid_argument("mask bits do not match dimensions");
        Mask m;
        m.width_ = width;
        m.height_ = height;
        for (auto& b : bits) b = b ? 1 : 0;
        m.bits_ = std::move(bits);
        return m;
    }

    int width() const { return width_; }
    int height() const { return height_; }

    bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

    std::size_t index(int x, int y) const { return std::size_t(y) * std::size_t(width_) + std::size_t(x); }

    std::uint8_t at(int x, int y) const { return bits_[index(x, y)]; }

    // Cells outside the grid read as background.
    std::uint8_t at_or_zero(int x, int y) const { return in_bounds(x, y) ? bits_[index(x, y)] : 0; }

    void set(int x, int y, std::uint8_t value) { bits_[index(x, y)] = value ? 1 : 0; }

    const std::vector<std::uint8_t>& bits() const { return bits_; }
    std::vector<std::uint8_t>& bits() { return bits_; }

    std::size_t foreground_count() const {
        std::size_t n = 0;
        for (std::uint8_t b : bits_) n += b;
        return n;
    }

    bool any() const {
        for (std::uint8_t b : bits_)
            if (b) return true;
        return false;
    }

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    static std::size_t checked_size(int width, int height) {
        if (width < 1 || height < 1) throw std::invalid_argument("mask dimensions must be at least 1x1");
        return std::size_t(width) * std::size_t(height);
    }

    int width_ = 1;
    int height_ = 1;
    std::vector<std::uint8_t> bits_ = std::vector<std::uint8_t>(1, 0);
};

/// Half-open pixel rectangle [x1,x2) x [y1,y2).
struct PixelBox {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    int width() const { return x2 - x1; }
    int height() const { return y2 - y1; }
    long long area() const { return static_cast<long long>(width()) * height(); }

    friend constexpr bool operator==(const PixelBox&, const PixelBox&) = default;
};

namespace detail {

inline double box_iou(long long ax1, long long ay1, long long ax2, long long ay2,
                      long long bx1, long long by1, long long bx2, long long by2) {
    const long long ix1 = ax1 > bx1 ? ax1 : bx1;
    const long long iy1 = ay1 > by1 ? ay1 : by1;
    const long long ix2 = ax2 < bx2 ? ax2 : bx2;
    const long long iy2 = ay2 < by2 ? ay2 : by2;
    if (ix2 <= ix1 || iy2 <= iy1) return 0.0;
    const double inter = double(ix2 - ix1) * double(iy2 - iy1);
    const double area_a = double(ax2 - ax1) * double(ay2 - ay1);
    const double area_b = double(bx2 - bx1) * double(by2 - by1);
    return inter / (area_a + area_b - inter);
}

}  // namespace detail

inline double iou(const PixelBox& a, const PixelBox& b) {
    return detail::box_iou(a.x1, a.y1, a.x2, a.y2, b.x1, b.y1, b.x2, b.y2);
}

inline Mask crop(const Mask& m, const PixelBox& box) {
    if (box.x1 < 0 || box.y1 < 0 || box.x2 > m.width() || box.y2 > m.height() ||
        box.x1 >= box.x2 || box.y1 >= box.y2)
        throw std::out_of_range("crop box outside mask bounds");
    Mask out(box.width(), box.height());
    for (int y = box.y1; y < box.y2; ++y)
        for (int x = box.x1; x < box.x2; ++x)
            out.set(x - box.x1, y - box.y1, m.at(x, y));
    return out;
}

/// Nearest-neighbor resize: target cell (x, y) copies the source cell at the
/// floor-scaled coordinates. Output stays binary; same-size resize is the identity.
inline Mask resize_nearest(const Mask& m, int target_width, int target_height) {
    if (target_width < 1 || target_height < 1)
        throw std::invalid_argument("resize target must be at least 1x1");
    Mask out(target_width, target_height);
    for (int y = 0; y < target_height; ++y) {
        const int sy = int(std::int64_t(y) * m.height() / target_height);
        for (int x = 0; x < target_width; ++x) {
            const int sx = int(std::int64_t(x) * m.width() / target_width);
            out.set(x, y, m.at(sx, sy));
        }
    }
    return out;
}

}  // namespace topoforge
