#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <vector>

#include "topoforge/mask.hpp"
#include "topoforge/topology.hpp"

namespace topoforge {

namespace detail {

// Ring order around a pixel, clockwise from north.
inline constexpr int kRingDx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
inline constexpr int kRingDy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

inline int neighborhood_code(const Mask& m, int x, int y) {
    int code = 0;
    for (int k = 0; k < 8; ++k)
        if (m.at_or_zero(x + kRingDx[k], y + kRingDy[k])) code |= 1 << k;
    return code;
}

// Deletability table for the (8, 4) digital topology: a foreground pixel can be
// removed without changing local topology iff its ring has exactly one
// 8-connected foreground component and exactly one 4-connected background
// component that touches the center 4-adjacently.
inline const std::array<bool, 256>& simple_point_table() {
    static const std::array<bool, 256> table = [] {
        std::array<bool, 256> t{};
        auto adjacent = [](int a, int b, bool diag) {
            const int dx = kRingDx[a] - kRingDx[b];
            const int dy = kRingDy[a] - kRingDy[b];
            const int adx = dx < 0 ? -dx : dx, ady = dy < 0 ? -dy : dy;
            if (adx > 1 || ady > 1) return false;
            return diag ? true : (adx + ady == 1);
        };
        for (int code = 0; code < 256; ++code) {
            // foreground 8-components on the ring
            int fg_comps = 0;
            std::array<bool, 8> seen{};
            for (int k = 0; k < 8; ++k) {
                if (!(code & (1 << k)) || seen[k]) continue;
                ++fg_comps;
                std::array<int, 8> stack{};
                int top = 0;
                stack[top++] = k;
                seen[k] = true;
                while (top) {
                    const int c = stack[--top];
                    for (int j = 0; j < 8; ++j)
                        if ((code & (1 << j)) && !seen[j] && adjacent(c, j, true)) {
                            seen[j] = true;
                            stack[top++] = j;
                        }
                }
            }
            // background 4-components touching the center through N/E/S/W
            int bg_comps = 0;
            std::array<bool, 8> bseen{};
            for (int k = 0; k < 8; ++k) {
                if ((code & (1 << k)) || bseen[k]) continue;
                bool touches = false;
                std::array<int, 8> stack{};
                int top = 0;
                stack[top++] = k;
                bseen[k] = true;
                while (top) {
                    const int c = stack[--top];
                    if ((c & 1) == 0) touches = true;  // even ring slots are the 4-neighbors
                    for (int j = 0; j < 8; ++j)
                        if (!(code & (1 << j)) && !bseen[j] && adjacent(c, j, false)) {
                            bseen[j] = true;
                            stack[top++] = j;
                        }
                }
                if (touches) ++bg_comps;
            }
            t[std::size_t(code)] = fg_comps == 1 && bg_comps == 1;
        }
        return t;
    }();
    return table;
}

}  // namespace detail

/// One-pixel-wide thinning. Pixels are removed sequentially, one at a time, and
/// only when removal provably keeps local topology (simple-point test), so the
/// result has the same Betti pair as the input. Endpoints (degree 1) and
/// isolated pixels are kept. Four directional sub-passes per sweep keep the
/// centerline roughly centered; processing order is row-major, so the result is
/// deterministic.
inline Mask thin_mask(const Mask& src) {
    Mask img = src;
    const int w = img.width(), h = img.height();
    const auto& simple = detail::simple_point_table();

    std::vector<std::int32_t> candidates;
    candidates.reserve(img.foreground_count());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (img.bits()[img.index(x, y)]) candidates.push_back(std::int32_t(img.index(x, y)));

    static constexpr int pass_dx[4] = {0, 0, -1, 1};
    static constexpr int pass_dy[4] = {-1, 1, 0, 0};

    std::vector<std::uint8_t> queued(std::size_t(w) * h, 0);
    std::vector<std::int32_t> next;
    while (!candidates.empty()) {
        next.clear();
        bool deleted_any = false;
        for (int pass = 0; pass < 4; ++pass) {
            for (const std::int32_t idx : candidates) {
                if (!img.bits()[std::size_t(idx)]) continue;
                const int x = int(idx % w), y = int(idx / w);
                if (img.at_or_zero(x + pass_dx[pass], y + pass_dy[pass])) continue;
                const int code = detail::neighborhood_code(img, x, y);
                if (std::popcount(unsigned(code)) < 2) continue;  // keep endpoints and dots
                if (!simple[std::size_t(code)]) continue;
                img.set(x, y, 0);
                deleted_any = true;
                for (int k = 0; k < 8; ++k) {
                    const int nx = x + detail::kRingDx[k], ny = y + detail::kRingDy[k];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const std::size_t nidx = img.index(nx, ny);
                    if (img.bits()[nidx] && !queued[nidx]) {
                        queued[nidx] = 1;
                        next.push_back(std::int32_t(nidx));
                    }
                }
            }
        }
        if (!deleted_any) break;
        std::sort(next.begin(), next.end());
        for (const std::int32_t idx : next) queued[std::size_t(idx)] = 0;
        candidates = next;
    }
    return img;
}

inline int skeleton_degree(const Mask& thin, int x, int y) {
    return std::popcount(unsigned(detail::neighborhood_code(thin, x, y)));
}

/// Number of skeleton pixels with exactly one skeleton neighbor.
inline int count_endpoints(const Mask& thin) {
    int n = 0;
    for (int y = 0; y < thin.height(); ++y)
        for (int x = 0; x < thin.width(); ++x)
            if (thin.at(x, y) && skeleton_degree(thin, x, y) == 1) ++n;
    return n;
}

/// Thinned centerline plus its graph structure. Endpoints have one skeleton
/// neighbor, junctions three or more. Branches include their terminal node
/// pixels; node-free cycles are emitted as a single path with the closing step
/// left implicit, and isolated pixels as single-pixel paths. Every degree-2
/// pixel appears in exactly one branch.
struct Skeleton {
    Mask mask;
    std::vector<Pixel> endpoints;
    std::vector<Pixel> junctions;
    std::vector<std::vector<Pixel>> branches;
};

inline Skeleton skeletonize(const Mask& src) {
    Skeleton out;
    out.mask = thin_mask(src);
    const Mask& thin = out.mask;
    const int w = thin.width(), h = thin.height();

    std::vector<std::uint8_t> deg(std::size_t(w) * h, 0);
    std::vector<std::uint8_t> is_node(std::size_t(w) * h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!thin.at(x, y)) continue;
            const int d = skeleton_degree(thin, x, y);
            deg[thin.index(x, y)] = std::uint8_t(d);
            if (d == 1) {
                out.endpoints.push_back({x, y});
                is_node[thin.index(x, y)] = 1;
            } else if (d >= 3) {
                out.junctions.push_back({x, y});
                is_node[thin.index(x, y)] = 1;
            }
        }
    }

    std::vector<std::uint8_t> visited(std::size_t(w) * h, 0);

    auto next_step = [&](Pixel cur, Pixel prev) -> Pixel {
        for (int k = 0; k < 8; ++k) {
            const int nx = cur.x + detail::kRingDx[k], ny = cur.y + detail::kRingDy[k];
            if (!thin.in_bounds(nx, ny) || !thin.at(nx, ny)) continue;
            if (nx == prev.x && ny == prev.y) continue;
            return {nx, ny};
        }
        return prev;  // dead end: only way back
    };

    auto walk_from = [&](Pixel node, Pixel first) {
        std::vector<Pixel> path{node, first};
        visited[thin.index(first.x, first.y)] = 1;
        Pixel prev = node, cur = first;
        while (!is_node[thin.index(cur.x, cur.y)]) {
            const Pixel nxt = next_step(cur, prev);
            if (nxt == prev) break;  // isolated spur, cannot continue
            prev = cur;
            cur = nxt;
            path.push_back(cur);
            if (!is_node[thin.index(cur.x, cur.y)]) visited[thin.index(cur.x, cur.y)] = 1;
        }
        // a branch looping back onto its own node keeps the node only once
        if (path.size() > 1 && path.front() == path.back()) path.pop_back();
        out.branches.push_back(std::move(path));
    };

    // branches rooted at nodes
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = thin.index(x, y);
            if (!thin.at(x, y) || !is_node[idx]) continue;
            for (int k = 0; k < 8; ++k) {
                const int nx = x + detail::kRingDx[k], ny = y + detail::kRingDy[k];
                if (!thin.in_bounds(nx, ny) || !thin.at(nx, ny)) continue;
                const std::size_t nidx = thin.index(nx, ny);
                if (is_node[nidx]) {
                    if (idx < nidx) out.branches.push_back({{x, y}, {nx, ny}});
                    continue;
                }
                if (!visited[nidx]) walk_from({x, y}, {nx, ny});
            }
        }
    }

    // leftover degree-2 pixels form node-free cycles
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = thin.index(x, y);
            if (!thin.at(x, y) || is_node[idx] || visited[idx]) continue;
            if (deg[idx] == 0) {
                visited[idx] = 1;
                out.branches.push_back({{x, y}});
                continue;
            }
            std::vector<Pixel> path{{x, y}};
            visited[idx] = 1;
            Pixel prev{x, y};
            Pixel cur = next_step({x, y}, {x, y});
            while (!(cur.x == x && cur.y == y)) {
                path.push_back(cur);
                visited[thin.index(cur.x, cur.y)] = 1;
                const Pixel nxt = next_step(cur, prev);
                if (nxt == prev) break;
                prev = cur;
                cur = nxt;
            }
            out.branches.push_back(std::move(path));
        }
    }
    return out;
}

}  // namespace topoforge
