#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "topoforge/anomaly.hpp"
#include "topoforge/distance.hpp"
#include "topoforge/mask.hpp"
#include "topoforge/rng.hpp"
#include "topoforge/skeleton.hpp"
#include "topoforge/topology.hpp"

namespace topoforge::forge {

struct ForgeConfig {
    std::array<double, 4> bin_probs{0.20, 0.20, 0.40, 0.20};  // counts 0 / 1 / 2-5 / 6-10
    int max_retries = 20;            // injection attempts per planned error
    int gap_len_min = 5;             // broken_connection erased sub-path length
    int gap_len_max = 20;
    double bridge_curvature_min = 0.05;  // spurious_connection bow, fraction of chord
    double bridge_curvature_max = 0.35;
    int branch_len_min = 10;         // extra_branch walk length; also missing_branch walk cap
    int branch_len_max = 40;
    int box_padding = 4;             // pixels added around the diff before normalization
    double min_foreground = 0.01;    // patch acceptance fraction
    int patch_size = 256;
    int patch_attempts = 50;
};

enum class CountBin : int { zero = 0, one = 1, two_to_five = 2, six_to_ten = 3 };

struct InjectionPlan {
    CountBin bin = CountBin::zero;
    int count = 0;
    std::vector<AnomalyType> types;
};

/// Draws a count bin, resolves the count uniformly inside it, then draws each
/// error type with probability proportional to 1 / (1 + running count), where
/// the running counts include this plan's earlier draws. Underrepresented
/// types are preferred, so long-run type totals balance out.
inline InjectionPlan plan_injection(Rng& rng, std::span<const long> running_counts, const ForgeConfig& cfg) {
    if (running_counts.size() != 4) throw std::invalid_argument("plan_injection: need 4 running counts");
    InjectionPlan plan;
    plan.bin = CountBin(rng.weighted_index(std::span<const double>(cfg.bin_probs)));
    switch (plan.bin) {
        case CountBin::zero: plan.count = 0; break;
        case CountBin::one: plan.count = 1; break;
        case CountBin::two_to_five: plan.count = rng.uniform_int(2, 5); break;
        case CountBin::six_to_ten: plan.count = rng.uniform_int(6, 10); break;
    }
    std::array<long, 4> local{};
    for (int k = 0; k < plan.count; ++k) {
        std::array<double, 4> weights;
        for (std::size_t t = 0; t < 4; ++t) weights[t] = 1.0 / double(1 + running_counts[t] + local[t]);
        const std::size_t t = rng.weighted_index(std::span<const double>(weights));
        ++local[t];
        plan.types.push_back(AnomalyType(int(t)));
    }
    return plan;
}

struct Patch {
    Mask mask;
    PixelBox box;  // location within the source
};

/// Rejection-sampled random crop whose foreground fraction meets the config
/// minimum; gives up after patch_attempts tries.
inline std::optional<Patch> sample_patch(const Mask& source, Rng& rng, const ForgeConfig& cfg) {
    const int ps = cfg.patch_size;
    if (source.width() < ps || source.height() < ps)
        throw std::invalid_argument("sample_patch: source smaller than patch size");
    const double needed = cfg.min_foreground * double(ps) * double(ps);
    for (int attempt = 0; attempt < cfg.patch_attempts; ++attempt) {
        const int x0 = rng.uniform_int(0, source.width() - ps);
        const int y0 = rng.uniform_int(0, source.height() - ps);
        std::size_t fg = 0;
        for (int y = y0; y < y0 + ps; ++y)
            for (int x = x0; x < x0 + ps; ++x) fg += source.at(x, y);
        if (double(fg) >= needed) {
            const PixelBox box{x0, y0, x0 + ps, y0 + ps};
            return Patch{crop(source, box), box};
        }
    }
    return std::nullopt;
}

namespace detail {

struct MaskState {
    Skeleton skel;
    std::vector<int> radius;
    BettiPair betti_pair;
    Labeling labels;

    static MaskState compute(const Mask& m) {
        MaskState st;
        st.skel = skeletonize(m);
        st.radius = local_radius(m);
        st.betti_pair = betti(m);
        st.labels = label_components(m, Connectivity::eight);
        return st;
    }

    int endpoint_count() const { return int(skel.endpoints.size()); }
};

inline void erase_square(Mask& m, int cx, int cy, int radius, std::vector<Pixel>& diff) {
    for (int y = std::max(0, cy - radius); y <= std::min(m.height() - 1, cy + radius); ++y)
        for (int x = std::max(0, cx - radius); x <= std::min(m.width() - 1, cx + radius); ++x)
            if (m.at(x, y)) {
                m.set(x, y, 0);
                diff.push_back({x, y});
            }
}

inline void stamp_disk(Mask& m, int cx, int cy, double radius, std::vector<Pixel>& diff) {
    const int r = int(std::ceil(radius));
    const double r2 = radius * radius;
    for (int y = std::max(0, cy - r); y <= std::min(m.height() - 1, cy + r); ++y)
        for (int x = std::max(0, cx - r); x <= std::min(m.width() - 1, cx + r); ++x) {
            const double dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy <= r2 && !m.at(x, y)) {
                m.set(x, y, 1);
                diff.push_back({x, y});
            }
        }
}

inline bool disk_touches(const Mask& m, int cx, int cy, double radius) {
    const int r = int(std::ceil(radius));
    const double r2 = radius * radius;
    for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x) {
            const double dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy <= r2 && m.at_or_zero(x, y)) return true;
        }
    return false;
}

struct InjectionOutcome {
    Mask corrupted;
    std::vector<Pixel> diff;
};

// Severs a tube: takes a random interior sub-path of a skeleton branch and
// erases everything within (local radius + 2) of it.
inline std::optional<InjectionOutcome> inject_broken(const Mask& mask, const MaskState& st, Rng& rng,
                                                     const ForgeConfig& cfg) {
    std::vector<std::pair<int, int>> pool;  // (branch, offset) of interior pixels
    for (int b = 0; b < int(st.skel.branches.size()); ++b) {
        const auto& path = st.skel.branches[std::size_t(b)];
        for (int i = 0; i < int(path.size()); ++i) {
            const Pixel p = path[std::size_t(i)];
            if (skeleton_degree(st.skel.mask, p.x, p.y) == 2) pool.push_back({b, i});
        }
    }
    if (pool.empty()) return std::nullopt;
    const auto [branch_id, offset] = pool[std::size_t(rng.uniform_int(0, int(pool.size()) - 1))];
    const auto& path = st.skel.branches[std::size_t(branch_id)];
    const int want = rng.uniform_int(cfg.gap_len_min, cfg.gap_len_max);
    int start = std::max(0, offset - want / 2);
    const int end = std::min(int(path.size()), start + want);
    start = std::max(0, std::min(start, end - 1));

    InjectionOutcome out{mask, {}};
    for (int i = start; i < end; ++i) {
        const Pixel p = path[std::size_t(i)];
        erase_square(out.corrupted, p.x, p.y, st.radius[mask.index(p.x, p.y)] + 2, out.diff);
    }
    if (out.diff.empty()) return std::nullopt;
    return out;
}

// Bridges two skeleton anchors with a bowed quadratic curve, preferring
// anchors on different components when the mask has several.
inline std::optional<InjectionOutcome> inject_spurious(const Mask& mask, const MaskState& st, Rng& rng,
                                                       const ForgeConfig& cfg) {
    std::vector<Pixel> pixels;
    for (int y = 0; y < st.skel.mask.height(); ++y)
        for (int x = 0; x < st.skel.mask.width(); ++x)
            if (st.skel.mask.at(x, y)) pixels.push_back({x, y});
    if (pixels.size() < 2) return std::nullopt;

    constexpr double kMinAnchorDist = 15.0;
    const bool multi = st.betti_pair.b0 >= 2;
    Pixel a{}, b{};
    bool found = false;
    for (int attempt = 0; attempt < 40 && !found; ++attempt) {
        const Pixel pa = pixels[std::size_t(rng.uniform_int(0, int(pixels.size()) - 1))];
        const Pixel pb = pixels[std::size_t(rng.uniform_int(0, int(pixels.size()) - 1))];
        const double dx = pb.x - pa.x, dy = pb.y - pa.y;
        const double dist = std::sqrt(dx * dx + dy * dy);
        if (dist < kMinAnchorDist) continue;
        const bool same = st.labels.labels[mask.index(pa.x, pa.y)] == st.labels.labels[mask.index(pb.x, pb.y)];
        if (multi && same && attempt < 25) continue;  // keep looking for a cross-component pair
        a = pa;
        b = pb;
        found = true;
    }
    if (!found) return std::nullopt;

    const double dx = b.x - a.x, dy = b.y - a.y;
    const double chord = std::sqrt(dx * dx + dy * dy);
    const double bow = rng.uniform_real(cfg.bridge_curvature_min, cfg.bridge_curvature_max) * chord *
                       (rng.coin() ? 1.0 : -1.0);
    const double mx = (a.x + b.x) / 2.0 - dy / chord * bow;
    const double my = (a.y + b.y) / 2.0 + dx / chord * bow;
    const double halfwidth =
        std::max(1.0, (st.radius[mask.index(a.x, a.y)] + st.radius[mask.index(b.x, b.y)]) / 2.0);

    InjectionOutcome out{mask, {}};
    const int steps = std::max(8, int(std::ceil(chord * 2.0)));
    for (int s = 0; s <= steps; ++s) {
        const double t = double(s) / steps;
        const double omt = 1.0 - t;
        const double px = omt * omt * a.x + 2.0 * omt * t * mx + t * t * b.x;
        const double py = omt * omt * a.y + 2.0 * omt * t * my + t * t * b.y;
        stamp_disk(out.corrupted, int(std::lround(px)), int(std::lround(py)), halfwidth, out.diff);
    }
    if (out.diff.empty()) return std::nullopt;
    return out;
}

// Removes a terminal branch: walks from an endpoint toward the nearest
// junction (bounded by the branch length cap) and erases the mask pixels whose
// geodesically nearest skeleton pixel lies on that walk.
inline std::optional<InjectionOutcome> inject_missing(const Mask& mask, const MaskState& st, Rng& rng,
                                                      const ForgeConfig& cfg) {
    if (st.skel.endpoints.empty()) return std::nullopt;
    const Pixel e = st.skel.endpoints[std::size_t(rng.uniform_int(0, int(st.skel.endpoints.size()) - 1))];

    const std::vector<Pixel>* branch = nullptr;
    bool from_front = true;
    for (const auto& path : st.skel.branches) {
        if (path.front() == e) {
            branch = &path;
            from_front = true;
            break;
        }
        if (path.back() == e) {
            branch = &path;
            from_front = false;
            break;
        }
    }
    if (!branch || branch->size() < 2) return std::nullopt;

    std::vector<Pixel> seq(branch->begin(), branch->end());
    if (!from_front) std::reverse(seq.begin(), seq.end());
    const Pixel far = seq.back();
    const bool far_is_junction = skeleton_degree(st.skel.mask, far.x, far.y) >= 3;
    const int reserve = far_is_junction ? 1 : 3;  // keep a stub of free segments alive
    const int len = std::min(int(seq.size()) - reserve, cfg.branch_len_max);
    if (len < 1) return std::nullopt;

    std::unordered_set<std::size_t> kill;
    for (int i = 0; i < len; ++i) kill.insert(mask.index(seq[std::size_t(i)].x, seq[std::size_t(i)].y));

    // two-class geodesic BFS over the foreground from all skeleton pixels
    const int w = mask.width(), h = mask.height();
    std::vector<std::uint8_t> cls(std::size_t(w) * h, 0);  // 0 unseen, 1 kill, 2 keep
    std::deque<std::int32_t> queue;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!st.skel.mask.at(x, y)) continue;
            const std::size_t idx = mask.index(x, y);
            cls[idx] = kill.count(idx) ? 1 : 2;
            queue.push_back(std::int32_t(idx));
        }
    }
    while (!queue.empty()) {
        const std::int32_t cur = queue.front();
        queue.pop_front();
        const int cx = int(cur % w), cy = int(cur / w);
        for (int k = 0; k < 8; ++k) {
            const int nx = cx + topoforge::detail::kRingDx[k], ny = cy + topoforge::detail::kRingDy[k];
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            const std::size_t nidx = mask.index(nx, ny);
            if (mask.bits()[nidx] && !cls[nidx]) {
                cls[nidx] = cls[std::size_t(cur)];
                queue.push_back(std::int32_t(nidx));
            }
        }
    }

    InjectionOutcome out{mask, {}};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (cls[mask.index(x, y)] == 1) {
                out.corrupted.set(x, y, 0);
                out.diff.push_back({x, y});
            }
    if (out.diff.empty()) return std::nullopt;
    return out;
}

// Grows a false branch: a jittered walk from a skeleton anchor out into the
// background, stamped at the anchor's local radius. The walk stops before it
// would merge back into the structure.
inline std::optional<InjectionOutcome> inject_extra(const Mask& mask, const MaskState& st, Rng& rng,
                                                    const ForgeConfig& cfg) {
    std::vector<Pixel> anchors;
    for (int y = 0; y < st.skel.mask.height(); ++y)
        for (int x = 0; x < st.skel.mask.width(); ++x)
            if (st.skel.mask.at(x, y) && skeleton_degree(st.skel.mask, x, y) >= 2) anchors.push_back({x, y});
    if (anchors.empty()) {
        for (const Pixel p : st.skel.endpoints) anchors.push_back(p);
        if (anchors.empty()) return std::nullopt;
    }
    const Pixel a = anchors[std::size_t(rng.uniform_int(0, int(anchors.size()) - 1))];
    const double r0 = std::max(1.0, double(st.radius[mask.index(a.x, a.y)]));

    // aim at open space: accept a heading whose first few steps stay off the mask
    double heading = 0.0;
    bool aimed = false;
    for (int attempt = 0; attempt < 8 && !aimed; ++attempt) {
        heading = rng.uniform_real(0.0, 2.0 * 3.14159265358979323846);
        aimed = true;
        for (int probe = 3; probe <= 6; ++probe) {
            const int px = a.x + int(std::lround(std::cos(heading) * (r0 + probe)));
            const int py = a.y + int(std::lround(std::sin(heading) * (r0 + probe)));
            if (mask.at_or_zero(px, py)) {
                aimed = false;
                break;
            }
        }
    }
    if (!aimed) return std::nullopt;

    const int want = rng.uniform_int(cfg.branch_len_min, cfg.branch_len_max);
    InjectionOutcome out{mask, {}};
    double px = a.x + 0.5, py = a.y + 0.5;
    int placed = 0;
    for (int step = 0; step < want; ++step) {
        heading += rng.uniform_real(-0.35, 0.35);
        px += std::cos(heading);
        py += std::sin(heading);
        const int cx = int(std::floor(px)), cy = int(std::floor(py));
        if (!mask.in_bounds(cx, cy)) break;
        const double from_anchor = std::max(std::abs(cx - a.x), std::abs(cy - a.y));
        if (from_anchor > r0 + 2.0 && disk_touches(mask, cx, cy, r0 + 1.0)) break;  // would merge
        stamp_disk(out.corrupted, cx, cy, r0, out.diff);
        ++placed;
    }
    if (placed < 5 || int(out.diff.size()) < 3) return std::nullopt;
    return out;
}

inline std::optional<InjectionOutcome> inject_with(const Mask& mask, const MaskState& st, AnomalyType type,
                                                   Rng& rng, const ForgeConfig& cfg) {
    switch (type) {
        case AnomalyType::broken_connection: return inject_broken(mask, st, rng, cfg);
        case AnomalyType::spurious_connection: return inject_spurious(mask, st, rng, cfg);
        case AnomalyType::missing_branch: return inject_missing(mask, st, rng, cfg);
        case AnomalyType::extra_branch: return inject_extra(mask, st, rng, cfg);
    }
    return std::nullopt;
}

// Signature table. Betti deltas alone cannot see branch edits, which are
// homotopy-neutral, so those check the skeleton endpoint count instead.
inline bool signature_ok(AnomalyType type, const BettiPair& before, const BettiPair& after,
                         int endpoints_before, int endpoints_after) {
    const int db0 = after.b0 - before.b0;
    const int db1 = after.b1 - before.b1;
    switch (type) {
        case AnomalyType::broken_connection: return db0 >= 1 || db1 <= -1;
        case AnomalyType::spurious_connection: return db0 <= -1 || db1 >= 1;
        case AnomalyType::missing_branch: return db0 == 0 && db1 == 0 && endpoints_after < endpoints_before;
        case AnomalyType::extra_branch: return db0 == 0 && db1 == 0 && endpoints_after > endpoints_before;
    }
    return false;
}

inline PixelBox padded_bbox(std::span<const Pixel> diff, int padding, int width, int height) {
    int x1 = width, y1 = height, x2 = 0, y2 = 0;
    for (const Pixel p : diff) {
        x1 = std::min(x1, p.x);
        y1 = std::min(y1, p.y);
        x2 = std::max(x2, p.x + 1);
        y2 = std::max(y2, p.y + 1);
    }
    return {std::max(0, x1 - padding), std::max(0, y1 - padding),
            std::min(width, x2 + padding), std::min(height, y2 + padding)};
}

inline bool boxes_intersect(const PixelBox& a, const PixelBox& b) {
    return a.x1 < b.x2 && b.x1 < a.x2 && a.y1 < b.y2 && b.y1 < a.y2;
}

}  // namespace detail

/// Applies one anomaly of the given type; fails with nullopt when no viable
/// site exists. The returned diff is exactly the set of flipped pixels.
struct InjectionOutcome {
    Mask corrupted;
    std::vector<Pixel> diff;
};

inline std::optional<InjectionOutcome> inject(const Mask& mask, AnomalyType type, Rng& rng,
                                              const ForgeConfig& cfg) {
    const auto st = detail::MaskState::compute(mask);
    auto res = detail::inject_with(mask, st, type, rng, cfg);
    if (!res) return std::nullopt;
    return InjectionOutcome{std::move(res->corrupted), std::move(res->diff)};
}

/// Accepts the edit iff the observed (Betti delta, endpoint delta) matches the
/// type's signature and the masks actually differ.
inline bool verify(const Mask& before, const Mask& after, AnomalyType type) {
    if (before.width() != after.width() || before.height() != after.height())
        throw std::invalid_argument("verify: mismatched dimensions");
    if (before == after) return false;
    const BettiPair bb = betti(before), ba = betti(after);
    int eb = 0, ea = 0;
    if (type == AnomalyType::missing_branch || type == AnomalyType::extra_branch) {
        eb = count_endpoints(thin_mask(before));
        ea = count_endpoints(thin_mask(after));
    }
    return detail::signature_ok(type, bb, ba, eb, ea);
}

/// Tight bounding box of the diff, expanded by the configured padding, clamped
/// to the image, scaled to [0,1000] by rounding down; rejected when the
/// normalized width or height falls outside [10, 900].
inline std::optional<NormBox> derive_box(std::span<const Pixel> diff, int width, int height,
                                         const ForgeConfig& cfg) {
    if (diff.empty()) throw std::invalid_argument("derive_box: empty diff");
    const PixelBox padded = detail::padded_bbox(diff, cfg.box_padding, width, height);
    const NormBox box = normalize_box(padded, width, height);
    if (box.width() < kMinNormSide || box.width() > kMaxNormSide) return std::nullopt;
    if (box.height() < kMinNormSide || box.height() > kMaxNormSide) return std::nullopt;
    return box;
}

struct SampleRecord {
    std::string id;
    std::string source;
    Mask clean;
    Mask corrupt;
    std::vector<Anomaly> annotations;  // canonically sorted
    BettiPair betti_before;
    BettiPair betti_after;
    std::uint64_t seed = 0;
    std::string image_path;  // optional companion image, empty when absent
};

struct InjectionTrace {
    AnomalyType type = AnomalyType::broken_connection;
    std::vector<Pixel> diff;
    NormBox box;
};

struct CorruptResult {
    SampleRecord record;
    std::vector<InjectionTrace> steps;  // in injection order, before canonical sorting
    int dropped = 0;                    // planned errors abandoned after max_retries
};

/// Runs the plan against the evolving mask. Every planned error gets up to
/// max_retries attempts with a fresh random site; an attempt commits only when
/// the site avoids earlier padded diff boxes, the box filter passes, and the
/// topological signature verifies. Failures drop that error, never the sample.
inline CorruptResult corrupt(const Mask& clean, const InjectionPlan& plan, Rng& rng, const ForgeConfig& cfg) {
    CorruptResult out;
    Mask cur = clean;
    auto st = detail::MaskState::compute(cur);
    out.record.betti_before = st.betti_pair;

    std::vector<PixelBox> used_boxes;
    for (const AnomalyType type : plan.types) {
        bool committed = false;
        for (int attempt = 0; attempt < cfg.max_retries && !committed; ++attempt) {
            auto res = detail::inject_with(cur, st, type, rng, cfg);
            if (!res) continue;
            const PixelBox padded = detail::padded_bbox(res->diff, cfg.box_padding, cur.width(), cur.height());
            bool clash = false;
            for (const PixelBox& prev : used_boxes)
                if (detail::boxes_intersect(padded, prev)) {
                    clash = true;
                    break;
                }
            if (clash) continue;
            const auto box = derive_box(res->diff, cur.width(), cur.height(), cfg);
            if (!box) continue;

            const BettiPair after_betti = betti(res->corrupted);
            const bool branch_edit = type == AnomalyType::missing_branch || type == AnomalyType::extra_branch;
            Skeleton after_skel;
            int after_endpoints = 0;
            if (branch_edit) {
                after_skel = skeletonize(res->corrupted);
                after_endpoints = int(after_skel.endpoints.size());
            }
            if (!detail::signature_ok(type, st.betti_pair, after_betti, st.endpoint_count(), after_endpoints))
                continue;

            cur = std::move(res->corrupted);
            if (branch_edit) {
                st.skel = std::move(after_skel);
                st.radius = local_radius(cur);
                st.betti_pair = after_betti;
                st.labels = label_components(cur, Connectivity::eight);
            } else {
                st = detail::MaskState::compute(cur);
            }
            used_boxes.push_back(padded);
            out.record.annotations.push_back({*box, type});
            out.steps.push_back({type, std::move(res->diff), *box});
            committed = true;
        }
        if (!committed) ++out.dropped;
    }

    canonical_sort(out.record.annotations);
    out.record.clean = clean;
    out.record.corrupt = std::move(cur);
    out.record.betti_after = st.betti_pair;
    return out;
}

}  // namespace topoforge::forge
