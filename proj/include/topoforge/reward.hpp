#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "topoforge/anomaly.hpp"
#include "topoforge/assignment.hpp"
#include "topoforge/mask.hpp"
#include "topoforge/skeleton.hpp"

namespace topoforge::reward {

/// Piecewise power interpolation from raw IoU to a score in [0,1].
/// Below the first threshold: r1 * (x / t1)^gamma; inside tier k:
/// r_{k-1} + (r_k - r_{k-1}) * ((x - t_{k-1}) / (t_k - t_{k-1}))^gamma;
/// at or above the last threshold: r_K. The "raw" preset degenerates to the
/// identity (single tier at 1.0 with gamma 1).
struct PhiMapping {
    std::string name = "tiered";
    std::vector<double> thresholds{0.3, 0.5, 0.7, 0.9};
    std::vector<double> ceilings{0.25, 0.55, 0.80, 1.0};
    double gamma = 1.5;

    static PhiMapping tiered() { return {}; }
    static PhiMapping linear() { return {"linear", {0.3, 0.5, 0.7, 0.9}, {0.25, 0.55, 0.80, 1.0}, 1.0}; }
    static PhiMapping coco() { return {"coco", {0.5, 0.75, 0.9}, {0.55, 0.80, 1.0}, 1.5}; }
    static PhiMapping raw() { return {"raw", {1.0}, {1.0}, 1.0}; }

    static std::optional<PhiMapping> from_name(std::string_view preset) {
        if (preset == "tiered") return tiered();
        if (preset == "linear") return linear();
        if (preset == "coco") return coco();
        if (preset == "raw") return raw();
        return std::nullopt;
    }
};

inline double phi(double iou_value, const PhiMapping& m) {
    const auto& t = m.thresholds;
    const auto& r = m.ceilings;
    if (iou_value >= t.back()) return r.back();
    if (iou_value < t.front()) {
        if (iou_value <= 0.0) return 0.0;
        return r.front() * std::pow(iou_value / t.front(), m.gamma);
    }
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (iou_value < t[k])
            return r[k - 1] + (r[k] - r[k - 1]) * std::pow((iou_value - t[k - 1]) / (t[k] - t[k - 1]), m.gamma);
    }
    return r.back();
}

struct RewardConfig {
    double w_fmt = 0.10;
    double w_acc = 0.85;
    double w_topo = 0.05;
    double match_iou = 0.10;       // Hungarian acceptance floor tau_m
    double size_threshold = 0.30;  // LocPen tau_size
    double size_penalty = 0.80;    // LocPen lambda
    PhiMapping phi = PhiMapping::tiered();
    bool normalize_acc = false;    // divide R_acc by 3 instead of the literal sum
};

struct ParsedAnswer {
    bool ok = false;
    std::vector<Anomaly> anomalies;
    std::string error;  // first violation, empty when ok
};

/// Extracts the region between the final matched <answer>...</answer> pair and
/// parses it as a JSON array of {"Position": [x1,y1,x2,y2], "ErrorType": label}
/// objects with integer coordinates in [0,1000]. An empty array is a valid
/// zero-anomaly answer.
inline ParsedAnswer parse_answer(std::string_view text) {
    ParsedAnswer out;
    static constexpr std::string_view kOpen = "<answer>";
    static constexpr std::string_view kClose = "</answer>";
    const std::size_t close = text.rfind(kClose);
    if (close == std::string_view::npos) {
        out.error = "missing </answer> tag";
        return out;
    }
    const std::size_t open = text.rfind(kOpen, close);
    if (open == std::string_view::npos) {
        out.error = "missing <answer> tag";
        return out;
    }
    const std::string_view payload = text.substr(open + kOpen.size(), close - open - kOpen.size());

    const nlohmann::json parsed = nlohmann::json::parse(payload, nullptr, false);
    if (parsed.is_discarded()) {
        out.error = "answer payload is not valid JSON";
        return out;
    }
    if (!parsed.is_array()) {
        out.error = "answer payload is not a list";
        return out;
    }
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        const auto& item = parsed[i];
        const std::string where = "entry " + std::to_string(i);
        if (!item.is_object() || item.size() != 2 || !item.contains("Position") || !item.contains("ErrorType")) {
            out.error = where + ": expected an object with exactly Position and ErrorType";
            return out;
        }
        const auto& pos = item["Position"];
        if (!pos.is_array() || pos.size() != 4) {
            out.error = where + ": Position must be a list of four integers";
            return out;
        }
        int coords[4];
        for (std::size_t c = 0; c < 4; ++c) {
            if (!pos[c].is_number_integer()) {
                out.error = where + ": Position[" + std::to_string(c) + "] is not an integer";
                return out;
            }
            const auto v = pos[c].get<std::int64_t>();
            if (v < 0 || v > kNormExtent) {
                out.error = where + ": Position[" + std::to_string(c) + "] outside [0,1000]";
                return out;
            }
            coords[c] = int(v);
        }
        if (coords[0] >= coords[2] || coords[1] >= coords[3]) {
            out.error = where + ": degenerate box (x1 >= x2 or y1 >= y2)";
            return out;
        }
        if (!item["ErrorType"].is_string()) {
            out.error = where + ": ErrorType is not a string";
            return out;
        }
        const auto type = parse_label(item["ErrorType"].get<std::string>());
        if (!type) {
            out.error = where + ": unknown ErrorType label";
            return out;
        }
        out.anomalies.push_back({{coords[0], coords[1], coords[2], coords[3]}, *type});
    }
    out.ok = true;
    return out;
}

inline int format_reward(std::string_view text) { return parse_answer(text).ok ? 1 : 0; }

struct AccuracyResult {
    double r_det = 0.0;
    double r_loc = 0.0;
    double r_type = 0.0;
    double r_acc = 0.0;
    bool negative_case = false;  // both sides empty
    MatchResult match;
};

/// R_acc = R_det + R_loc + R_type (or the mean of the three when the
/// normalization flag is set). Corner cases come first: both sides empty
/// scores 1, exactly one empty side scores 0.
inline AccuracyResult accuracy_reward(std::span<const Anomaly> gt, std::span<const Anomaly> pred,
                                      const RewardConfig& cfg) {
    AccuracyResult out;
    if (gt.empty() && pred.empty()) {
        out.negative_case = true;
        out.r_acc = 1.0;
        return out;
    }
    if (gt.empty() || pred.empty()) {
        out.match = match_typed(gt, pred, cfg.match_iou);
        return out;
    }
    out.match = match_typed(gt, pred, cfg.match_iou);

    double soft_tp = 0.0;
    for (const auto& p : out.match.pairs) soft_tp += phi(p.iou, cfg.phi);
    const double fp = double(out.match.false_positives.size());
    const double fn = double(out.match.false_negatives.size());
    const double denom = 2.0 * soft_tp + fp + fn;
    out.r_det = denom > 0.0 ? 2.0 * soft_tp / denom : 0.0;

    if (!out.match.pairs.empty()) out.r_loc = soft_tp / double(out.match.pairs.size());
    out.r_type = double(out.match.pairs.size()) / double(std::max(gt.size(), pred.size()));
    out.r_acc = out.r_det + out.r_loc + out.r_type;
    if (cfg.normalize_acc) out.r_acc /= 3.0;
    return out;
}

/// Centerline Dice between two shape-aligned crops: harmonic mean of
/// Tprec = |skel(corr) ∩ gt| / |skel(corr)| and Tsens = |skel(gt) ∩ corr| / |skel(gt)|.
/// Both masks empty scores 1; an empty skeleton against a nonempty one scores 0.
inline double cl_dice(const Mask& gt_crop, const Mask& corr_crop) {
    if (gt_crop.width() != corr_crop.width() || gt_crop.height() != corr_crop.height())
        throw std::invalid_argument("cl_dice requires shape-aligned crops");
    const bool gt_any = gt_crop.any();
    const bool corr_any = corr_crop.any();
    if (!gt_any && !corr_any) return 1.0;
    if (!gt_any || !corr_any) return 0.0;

    const Mask skel_gt = thin_mask(gt_crop);
    const Mask skel_corr = thin_mask(corr_crop);
    long long s_corr = 0, s_corr_in_gt = 0, s_gt = 0, s_gt_in_corr = 0;
    for (int y = 0; y < gt_crop.height(); ++y) {
        for (int x = 0; x < gt_crop.width(); ++x) {
            if (skel_corr.at(x, y)) {
                ++s_corr;
                if (gt_crop.at(x, y)) ++s_corr_in_gt;
            }
            if (skel_gt.at(x, y)) {
                ++s_gt;
                if (corr_crop.at(x, y)) ++s_gt_in_corr;
            }
        }
    }
    if (s_corr == 0 || s_gt == 0) return 0.0;
    const double tprec = double(s_corr_in_gt) / double(s_corr);
    const double tsens = double(s_gt_in_corr) / double(s_gt);
    if (tprec + tsens <= 0.0) return 0.0;
    return 2.0 * tprec * tsens / (tprec + tsens);
}

/// Multiplicative penalty against oversized boxes: 1 while the box covers at
/// most tau_size of the image, then a linear ramp down with slope lambda.
inline double loc_pen(const NormBox& box, const RewardConfig& cfg) {
    const double rho = double(box.area()) / (double(kNormExtent) * double(kNormExtent));
    if (rho <= cfg.size_threshold) return 1.0;
    return std::max(0.0, 1.0 - cfg.size_penalty * (rho - cfg.size_threshold) / (1.0 - cfg.size_threshold));
}

/// Mean over matched pairs of (1 - clDice) * LocPen, zero with no pairs.
/// The clean mask is cropped by the ground-truth box and the corrupted mask by
/// the predicted box; the ground-truth crop is resized to the predicted crop's
/// shape with nearest-neighbor sampling. Pairs whose de-normalized box
/// degenerates to zero pixels contribute 0.
inline double topo_reward(const MatchResult& match, const Mask& clean, const Mask& corrupt,
                          std::span<const Anomaly> gt, std::span<const Anomaly> pred,
                          const RewardConfig& cfg) {
    if (match.pairs.empty()) return 0.0;
    double total = 0.0;
    for (const auto& p : match.pairs) {
        const PixelBox gt_px = denormalize_box(gt[std::size_t(p.gt)].box, clean.width(), clean.height());
        const PixelBox pred_px = denormalize_box(pred[std::size_t(p.pred)].box, corrupt.width(), corrupt.height());
        if (gt_px.width() <= 0 || gt_px.height() <= 0 || pred_px.width() <= 0 || pred_px.height() <= 0)
            continue;
        const Mask gt_crop = resize_nearest(crop(clean, gt_px), pred_px.width(), pred_px.height());
        const Mask corr_crop = crop(corrupt, pred_px);
        total += (1.0 - cl_dice(gt_crop, corr_crop)) * loc_pen(pred[std::size_t(p.pred)].box, cfg);
    }
    return total / double(match.pairs.size());
}

struct RewardBreakdown {
    int r_fmt = 0;
    double r_det = 0.0;
    double r_loc = 0.0;
    double r_type = 0.0;
    double r_acc = 0.0;
    double r_topo = 0.0;
    double r_total = 0.0;
    bool negative_case = false;
    int n_gt = 0;
    int n_pred = 0;
    std::string parse_error;  // empty when the answer parsed
    MatchResult match;
};

/// R_total = w_fmt * R_fmt + w_acc * R_acc + w_topo * R_topo. A response that
/// fails the format gate contributes an empty prediction list downstream.
inline RewardBreakdown total_reward(const Mask& clean, const Mask& corrupt,
                                    std::span<const Anomaly> annotations, std::string_view response,
                                    const RewardConfig& cfg) {
    const ParsedAnswer parsed = parse_answer(response);
    RewardBreakdown out;
    out.r_fmt = parsed.ok ? 1 : 0;
    out.parse_error = parsed.error;

    const std::span<const Anomaly> pred(parsed.anomalies);
    AccuracyResult acc = accuracy_reward(annotations, pred, cfg);
    out.r_det = acc.r_det;
    out.r_loc = acc.r_loc;
    out.r_type = acc.r_type;
    out.r_acc = acc.r_acc;
    out.negative_case = acc.negative_case;
    out.r_topo = topo_reward(acc.match, clean, corrupt, annotations, pred, cfg);
    out.match = std::move(acc.match);
    out.n_gt = int(annotations.size());
    out.n_pred = int(pred.size());
    out.r_total = cfg.w_fmt * out.r_fmt + cfg.w_acc * out.r_acc + cfg.w_topo * out.r_topo;
    return out;
}

/// Same scoring for a pre-parsed prediction list (no text gate involved; the
/// format reward is granted).
inline RewardBreakdown total_reward_parsed(const Mask& clean, const Mask& corrupt,
                                           std::span<const Anomaly> annotations,
                                           std::span<const Anomaly> pred, const RewardConfig& cfg) {
    RewardBreakdown out;
    out.r_fmt = 1;
    AccuracyResult acc = accuracy_reward(annotations, pred, cfg);
    out.r_det = acc.r_det;
    out.r_loc = acc.r_loc;
    out.r_type = acc.r_type;
    out.r_acc = acc.r_acc;
    out.negative_case = acc.negative_case;
    out.r_topo = topo_reward(acc.match, clean, corrupt, annotations, pred, cfg);
    out.match = std::move(acc.match);
    out.n_gt = int(annotations.size());
    out.n_pred = int(pred.size());
    out.r_total = cfg.w_fmt * out.r_fmt + cfg.w_acc * out.r_acc + cfg.w_topo * out.r_topo;
    return out;
}

}  // namespace topoforge::reward
