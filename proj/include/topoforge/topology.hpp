#pragma once

#include <cstdint>
#include <vector>

#include "topoforge/mask.hpp"

namespace topoforge {

enum class Connectivity { four, eight };

/// b0 = connected components, b1 = independent loops.
struct BettiPair {
    int b0 = 0;
    int b1 = 0;
    friend constexpr bool operator==(const BettiPair&, const BettiPair&) = default;
};

struct Labeling {
    std::vector<std::int32_t> labels;  // row-major, 0 = background
    int count = 0;
};

/// Connected-component labeling. Components are numbered 1..count in
/// first-encounter order of a row-major scan; background stays 0.
inline Labeling label_components(const Mask& m, Connectivity conn) {
    static constexpr int dx4[] = {1, -1, 0, 0};
    static constexpr int dy4[] = {0, 0, 1, -1};
    static constexpr int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
    const int w = m.width(), h = m.height();
    const int n_dirs = conn == Connectivity::four ? 4 : 8;
    const int* dx = conn == Connectivity::four ? dx4 : dx8;
    const int* dy = conn == Connectivity::four ? dy4 : dy8;

    Labeling out;
    out.labels.assign(std::size_t(w) * h, 0);
    std::vector<std::int32_t> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = m.index(x, y);
            if (!m.bits()[idx] || out.labels[idx]) continue;
            const std::int32_t label = ++out.count;
            out.labels[idx] = label;
            stack.assign(1, std::int32_t(idx));
            while (!stack.empty()) {
                const std::int32_t cur = stack.back();
                stack.pop_back();
                const int cx = int(cur % w), cy = int(cur / w);
                for (int k = 0; k < n_dirs; ++k) {
                    const int nx = cx + dx[k], ny = cy + dy[k];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const std::size_t nidx = m.index(nx, ny);
                    if (m.bits()[nidx] && !out.labels[nidx]) {
                        out.labels[nidx] = label;
                        stack.push_back(std::int32_t(nidx));
                    }
                }
            }
        }
    }
    return out;
}

/// Betti numbers of a binary grid with 8-adjacent foreground and 4-adjacent
/// background. b1 counts background components of the grid padded by one
/// background pixel, minus the outer component.
inline BettiPair betti(const Mask& m) {
    BettiPair out;
    out.b0 = label_components(m, Connectivity::eight).count;

    Mask complement(m.width() + 2, m.height() + 2, 1);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            complement.set(x + 1, y + 1, m.at(x, y) ? 0 : 1);
    out.b1 = label_components(complement, Connectivity::four).count - 1;
    return out;
}

}  // namespace topoforge
