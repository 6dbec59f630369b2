#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "topoforge/mask.hpp"

namespace topoforge {

inline constexpr int kNormExtent = 1000;
inline constexpr int kMinNormSide = 10;
inline constexpr int kMaxNormSide = 900;

/// The four error categories, in canonical order.
enum class AnomalyType : int {
    broken_connection = 0,
    spurious_connection = 1,
    missing_branch = 2,
    extra_branch = 3,
};

inline constexpr std::array<AnomalyType, 4> kAnomalyTypes = {
    AnomalyType::broken_connection,
    AnomalyType::spurious_connection,
    AnomalyType::missing_branch,
    AnomalyType::extra_branch,
};

inline std::string_view to_label(AnomalyType t) {
    switch (t) {
        case AnomalyType::broken_connection: return "broken_connection";
        case AnomalyType::spurious_connection: return "spurious_connection";
        case AnomalyType::missing_branch: return "missing_branch";
        case AnomalyType::extra_branch: return "extra_branch";
    }
    return "broken_connection";
}

/// Accepts the canonical snake_case labels plus the common renderings seen in
/// the wild: any letter case, spaces instead of underscores, a trailing period,
/// and the abbreviated "broken_conn" / "spurious_conn" forms.
inline std::optional<AnomalyType> parse_label(std::string_view raw) {
    std::string s;
    s.reserve(raw.size());
    for (char c : raw) {
        if (std::isspace(static_cast<unsigned char>(c)) && (s.empty() || s.back() == '_')) continue;
        s.push_back(c == ' ' ? '_' : char(std::tolower(static_cast<unsigned char>(c))));
    }
    while (!s.empty() && (s.back() == '.' || s.back() == '_')) s.pop_back();
    if (s == "broken_connection" || s == "broken_conn") return AnomalyType::broken_connection;
    if (s == "spurious_connection" || s == "spurious_conn") return AnomalyType::spurious_connection;
    if (s == "missing_branch") return AnomalyType::missing_branch;
    if (s == "extra_branch") return AnomalyType::extra_branch;
    return std::nullopt;
}

/// Half-open box in the normalized [0,1000] coordinate space.
struct NormBox {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    int width() const { return x2 - x1; }
    int height() const { return y2 - y1; }
    long long area() const { return static_cast<long long>(width()) * height(); }
    bool valid() const { return 0 <= x1 && x1 < x2 && x2 <= kNormExtent && 0 <= y1 && y1 < y2 && y2 <= kNormExtent; }

    friend constexpr bool operator==(const NormBox&, const NormBox&) = default;
};

inline double iou(const NormBox& a, const NormBox& b) {
    return detail::box_iou(a.x1, a.y1, a.x2, a.y2, b.x1, b.y1, b.x2, b.y2);
}

struct Anomaly {
    NormBox box;
    AnomalyType type = AnomalyType::broken_connection;
    friend constexpr bool operator==(const Anomaly&, const Anomaly&) = default;
};

/// Canonical order: type (broken, spurious, missing, extra), then y1, then x1.
inline bool canonical_less(const Anomaly& a, const Anomaly& b) {
    if (a.type != b.type) return int(a.type) < int(b.type);
    if (a.box.y1 != b.box.y1) return a.box.y1 < b.box.y1;
    if (a.box.x1 != b.box.x1) return a.box.x1 < b.box.x1;
    if (a.box.y2 != b.box.y2) return a.box.y2 < b.box.y2;
    return a.box.x2 < b.box.x2;
}

inline void canonical_sort(std::vector<Anomaly>& anomalies) {
    std::stable_sort(anomalies.begin(), anomalies.end(), canonical_less);
}

inline bool is_canonically_sorted(const std::vector<Anomaly>& anomalies) {
    return std::is_sorted(anomalies.begin(), anomalies.end(), canonical_less);
}

// Pixel -> normalized scaling rounds down; so does the inverse. Both are
// order-preserving, and external tools can reproduce them bit-exactly.
inline int normalize_coord(int pixel, int extent) {
    return int(std::int64_t(pixel) * kNormExtent / extent);
}

inline int denormalize_coord(int norm, int extent) {
    const int v = int(std::int64_t(norm) * extent / kNormExtent);
    return std::clamp(v, 0, extent);
}

inline NormBox normalize_box(const PixelBox& b, int width, int height) {
    return {normalize_coord(b.x1, width), normalize_coord(b.y1, height),
            normalize_coord(b.x2, width), normalize_coord(b.y2, height)};
}

inline PixelBox denormalize_box(const NormBox& b, int width, int height) {
    return {denormalize_coord(b.x1, width), denormalize_coord(b.y1, height),
            denormalize_coord(b.x2, width), denormalize_coord(b.y2, height)};
}

}  // namespace topoforge
