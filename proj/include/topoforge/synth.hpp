#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "topoforge/forge.hpp"
#include "topoforge/mask.hpp"
#include "topoforge/rng.hpp"
#include "topoforge/topology.hpp"

namespace topoforge::forge {

struct SynthParams {
    int canvas = 320;
    int nodes = 9;
    int loop_edges = 2;
    double stroke_min = 1.0;  // stroke half-width range
    double stroke_max = 2.5;
    int margin = 16;
    int min_node_dist = 24;
    int max_attempts = 200;
};

namespace detail {

inline void stroke_curve(Mask& m, Pixel a, Pixel b, double bow, double halfwidth) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double chord = std::max(1.0, std::sqrt(dx * dx + dy * dy));
    const double mx = (a.x + b.x) / 2.0 - dy / chord * bow;
    const double my = (a.y + b.y) / 2.0 + dx / chord * bow;
    std::vector<Pixel> scratch;
    const int steps = std::max(8, int(std::ceil(chord * 2.0)));
    for (int s = 0; s <= steps; ++s) {
        const double t = double(s) / steps;
        const double omt = 1.0 - t;
        const double px = omt * omt * a.x + 2.0 * omt * t * mx + t * t * b.x;
        const double py = omt * omt * a.y + 2.0 * omt * t * my + t * t * b.y;
        stamp_disk(m, int(std::lround(px)), int(std::lround(py)), halfwidth, scratch);
    }
}

}  // namespace detail

/// Random tubular network: a nearest-neighbor spanning tree over scattered
/// anchor points plus the requested number of loop-closing edges, stroked at
/// varying widths. The result is regenerated until its Betti pair equals
/// (1, loop_edges), so incidental stroke merges never leak out.
inline Mask synth_network(Rng& rng, const SynthParams& params) {
    if (params.nodes < 2) throw std::invalid_argument("synth_network: need at least 2 nodes");
    if (params.canvas < 2 * params.margin + 8) throw std::invalid_argument("synth_network: canvas too small");

    for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
        std::vector<Pixel> nodes;
        for (int i = 0; i < params.nodes; ++i) {
            Pixel p{};
            bool placed = false;
            for (int t = 0; t < 60 && !placed; ++t) {
                p = {rng.uniform_int(params.margin, params.canvas - 1 - params.margin),
                     rng.uniform_int(params.margin, params.canvas - 1 - params.margin)};
                placed = true;
                for (const Pixel q : nodes) {
                    const int d = std::max(std::abs(p.x - q.x), std::abs(p.y - q.y));
                    if (d < params.min_node_dist) {
                        placed = false;
                        break;
                    }
                }
            }
            if (!placed) break;
            nodes.push_back(p);
        }
        if (int(nodes.size()) < params.nodes) continue;

        std::vector<std::pair<int, int>> edges;
        for (int k = 1; k < params.nodes; ++k) {
            int best = 0;
            double best_d = 1e18;
            for (int j = 0; j < k; ++j) {
                const double dx = nodes[std::size_t(k)].x - nodes[std::size_t(j)].x;
                const double dy = nodes[std::size_t(k)].y - nodes[std::size_t(j)].y;
                const double d = dx * dx + dy * dy;
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            edges.push_back({best, k});
        }

        auto has_edge = [&](int i, int j) {
            for (const auto& e : edges)
                if ((e.first == i && e.second == j) || (e.first == j && e.second == i)) return true;
            return false;
        };
        int loops_added = 0;
        for (int l = 0; l < params.loop_edges; ++l) {
            // shortest available extra edge from a random node keeps crossings rare
            for (int t = 0; t < 30; ++t) {
                const int i = rng.uniform_int(0, params.nodes - 1);
                int best = -1;
                double best_d = 1e18;
                for (int j = 0; j < params.nodes; ++j) {
                    if (j == i || has_edge(i, j)) continue;
                    const double dx = nodes[std::size_t(i)].x - nodes[std::size_t(j)].x;
                    const double dy = nodes[std::size_t(i)].y - nodes[std::size_t(j)].y;
                    const double d = dx * dx + dy * dy;
                    if (d < best_d) {
                        best_d = d;
                        best = j;
                    }
                }
                if (best >= 0) {
                    edges.push_back({i, best});
                    ++loops_added;
                    break;
                }
            }
        }
        if (loops_added != params.loop_edges) continue;

        Mask m(params.canvas, params.canvas);
        for (const auto& e : edges) {
            const double halfwidth = rng.uniform_real(params.stroke_min, params.stroke_max);
            const Pixel a = nodes[std::size_t(e.first)], b = nodes[std::size_t(e.second)];
            const double dx = b.x - a.x, dy = b.y - a.y;
            const double chord = std::sqrt(dx * dx + dy * dy);
            const double bow = rng.uniform_real(-0.18, 0.18) * chord;
            detail::stroke_curve(m, a, b, bow, halfwidth);
        }

        if (betti(m) == BettiPair{1, params.loop_edges}) return m;
    }
    throw std::runtime_error("synth_network: could not realize the requested topology");
}

}  // namespace topoforge::forge
