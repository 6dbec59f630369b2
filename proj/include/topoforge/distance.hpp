#pragma once

#include <algorithm>
#include <vector>

#include "topoforge/mask.hpp"

namespace topoforge {

/// Per-pixel Chebyshev distance to the nearest background cell; cells outside
/// the grid count as background, background pixels map to 0. Two-pass chamfer
/// with unit weights, which is exact for the L-inf metric.
inline std::vector<int> local_radius(const Mask& m) {
    const int w = m.width(), h = m.height();
    const int inf = w + h + 2;
    std::vector<int> d(std::size_t(w) * h, 0);

    auto fetch = [&](int x, int y) { return (x < 0 || x >= w || y < 0 || y >= h) ? 0 : d[m.index(x, y)]; };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = m.index(x, y);
            if (!m.bits()[idx]) {
                d[idx] = 0;
                continue;
            }
            int best = inf;
            best = std::min(best, fetch(x - 1, y));
            best = std::min(best, fetch(x - 1, y - 1));
            best = std::min(best, fetch(x, y - 1));
            best = std::min(best, fetch(x + 1, y - 1));
            d[idx] = best + 1;
        }
    }
    for (int y = h - 1; y >= 0; --y) {
        for (int x = w - 1; x >= 0; --x) {
            const std::size_t idx = m.index(x, y);
            if (!m.bits()[idx]) continue;
            int best = inf;
            best = std::min(best, fetch(x + 1, y));
            best = std::min(best, fetch(x + 1, y + 1));
            best = std::min(best, fetch(x, y + 1));
            best = std::min(best, fetch(x - 1, y + 1));
            d[idx] = std::min(d[idx], best + 1);
        }
    }
    return d;
}

}  // namespace topoforge
