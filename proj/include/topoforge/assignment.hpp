#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "topoforge/anomaly.hpp"

namespace topoforge {

struct MatchedPair {
    int gt = -1;
    int pred = -1;
    double iou = 0.0;
    friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

/// One-to-one type-aware matching outcome. Indices refer to the caller's lists;
/// every ground truth lands in pairs or false_negatives, every prediction in
/// pairs or false_positives.
struct MatchResult {
    std::vector<MatchedPair> pairs;
    std::vector<int> false_positives;
    std::vector<int> false_negatives;

    double total_iou() const {
        double s = 0.0;
        for (const auto& p : pairs) s += p.iou;
        return s;
    }
};

namespace detail {

// Shortest-augmenting-path solver for the square min-cost assignment problem.
inline std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& a) {
    const int n = int(a.size());
    if (n == 0) return {};
    const double kInf = 1e100;
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

// Best achievable total weight over one-to-one pairings of the listed rows and
// columns; pairings through non-positive weights count as unmatched.
inline double best_total(const std::vector<std::vector<double>>& w,
                         std::span<const int> rows, std::span<const int> cols) {
    if (rows.empty() || cols.empty()) return 0.0;
    const int n = int(std::max(rows.size(), cols.size()));
    double wmax = 0.0;
    for (int r : rows)
        for (int c : cols) wmax = std::max(wmax, w[std::size_t(r)][std::size_t(c)]);
    std::vector<std::vector<double>> cost(std::size_t(n), std::vector<double>(std::size_t(n), wmax));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            cost[i][j] = wmax - std::max(0.0, w[std::size_t(rows[i])][std::size_t(cols[j])]);
    const auto asg = min_cost_assignment(cost);
    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int j = asg[i];
        if (j >= 0 && std::size_t(j) < cols.size()) {
            const double val = w[std::size_t(rows[i])][std::size_t(cols[j])];
            if (val > 0.0) total += val;
        }
    }
    return total;
}

}  // namespace detail

inline constexpr int kCanonicalTieLimit = 16;

/// Maximum-total-weight one-to-one assignment. Returns the matched column per
/// row, -1 when unmatched; pairs with non-positive weight are never formed.
/// Among assignments whose totals tie within 1e-9, the lexicographically
/// smallest (row, col) pair sequence wins, which makes results independent of
/// input order; the canonicalization is skipped beyond kCanonicalTieLimit rows
/// or columns, where only determinism is kept.
inline std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& w) {
    const int rows = int(w.size());
    const int cols = rows ? int(w[0].size()) : 0;
    std::vector<int> result(std::size_t(rows), -1);
    if (rows == 0 || cols == 0) return result;

    std::vector<int> all_rows(std::size_t(rows)), all_cols(std::size_t(cols));
    for (int i = 0; i < rows; ++i) all_rows[std::size_t(i)] = i;
    for (int j = 0; j < cols; ++j) all_cols[std::size_t(j)] = j;
    const double best = detail::best_total(w, all_rows, all_cols);
    const double eps = 1e-9 * std::max(1.0, best);

    if (rows > kCanonicalTieLimit || cols > kCanonicalTieLimit) {
        const int n = std::max(rows, cols);
        double wmax = 0.0;
        for (const auto& row : w)
            for (double x : row) wmax = std::max(wmax, x);
        std::vector<std::vector<double>> cost(std::size_t(n), std::vector<double>(std::size_t(n), wmax));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) cost[std::size_t(i)][std::size_t(j)] = wmax - std::max(0.0, w[std::size_t(i)][std::size_t(j)]);
        const auto asg = detail::min_cost_assignment(cost);
        for (int i = 0; i < rows; ++i) {
            const int j = asg[std::size_t(i)];
            if (j >= 0 && j < cols && w[std::size_t(i)][std::size_t(j)] > 0.0) result[std::size_t(i)] = j;
        }
        return result;
    }

    // fix pairs greedily in (row, col) order, keeping the optimum reachable
    std::vector<int> free_cols = all_cols;
    double fixed = 0.0;
    for (int i = 0; i < rows; ++i) {
        std::vector<int> rest_rows;
        for (int r = i + 1; r < rows; ++r) rest_rows.push_back(r);
        int chosen = -1;
        for (const int j : free_cols) {
            if (w[std::size_t(i)][std::size_t(j)] <= 0.0) continue;
            std::vector<int> rest_cols;
            for (const int c : free_cols)
                if (c != j) rest_cols.push_back(c);
            const double total = fixed + w[std::size_t(i)][std::size_t(j)] + detail::best_total(w, rest_rows, rest_cols);
            if (total >= best - eps) {
                chosen = j;
                break;
            }
        }
        if (chosen >= 0) {
            result[std::size_t(i)] = chosen;
            fixed += w[std::size_t(i)][std::size_t(chosen)];
            free_cols.erase(std::find(free_cols.begin(), free_cols.end(), chosen));
        }
    }
    return result;
}

/// Per-type optimal assignment over IoU, before any acceptance threshold.
/// Predictions are matched on a content-sorted order internally, so the
/// returned pairs do not depend on how the prediction list is permuted.
inline std::vector<MatchedPair> assign_typed(std::span<const Anomaly> gt, std::span<const Anomaly> pred) {
    std::vector<MatchedPair> pairs;
    for (const AnomalyType t : kAnomalyTypes) {
        std::vector<int> gt_idx, pred_idx;
        for (int i = 0; i < int(gt.size()); ++i)
            if (gt[std::size_t(i)].type == t) gt_idx.push_back(i);
        for (int j = 0; j < int(pred.size()); ++j)
            if (pred[std::size_t(j)].type == t) pred_idx.push_back(j);
        if (gt_idx.empty() || pred_idx.empty()) continue;

        std::sort(pred_idx.begin(), pred_idx.end(), [&](int a, int b) {
            const NormBox& ba = pred[std::size_t(a)].box;
            const NormBox& bb = pred[std::size_t(b)].box;
            if (ba.x1 != bb.x1) return ba.x1 < bb.x1;
            if (ba.y1 != bb.y1) return ba.y1 < bb.y1;
            if (ba.x2 != bb.x2) return ba.x2 < bb.x2;
            if (ba.y2 != bb.y2) return ba.y2 < bb.y2;
            return a < b;
        });

        std::vector<std::vector<double>> w(gt_idx.size(), std::vector<double>(pred_idx.size(), 0.0));
        for (std::size_t gi = 0; gi < gt_idx.size(); ++gi)
            for (std::size_t pj = 0; pj < pred_idx.size(); ++pj)
                w[gi][pj] = iou(gt[std::size_t(gt_idx[gi])].box, pred[std::size_t(pred_idx[pj])].box);

        const auto asg = max_weight_assignment(w);
        for (std::size_t gi = 0; gi < gt_idx.size(); ++gi) {
            const int pj = asg[gi];
            if (pj >= 0) pairs.push_back({gt_idx[gi], pred_idx[std::size_t(pj)], w[gi][std::size_t(pj)]});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const MatchedPair& a, const MatchedPair& b) { return a.gt < b.gt; });
    return pairs;
}

/// Drops assigned pairs below min_iou, then derives FP/FN sets.
inline MatchResult apply_floor(const std::vector<MatchedPair>& pairs, std::size_t n_gt, std::size_t n_pred,
                               double min_iou) {
    MatchResult out;
    std::vector<char> gt_used(n_gt, 0), pred_used(n_pred, 0);
    for (const auto& p : pairs) {
        if (p.iou >= min_iou) {
            out.pairs.push_back(p);
            gt_used[std::size_t(p.gt)] = 1;
            pred_used[std::size_t(p.pred)] = 1;
        }
    }
    for (std::size_t i = 0; i < n_gt; ++i)
        if (!gt_used[i]) out.false_negatives.push_back(int(i));
    for (std::size_t j = 0; j < n_pred; ++j)
        if (!pred_used[j]) out.false_positives.push_back(int(j));
    return out;
}

/// Type-aware Hungarian matching: assignments maximize total IoU within each
/// type first, then pairs below min_iou are discarded into FP/FN.
inline MatchResult match_typed(std::span<const Anomaly> gt, std::span<const Anomaly> pred, double min_iou) {
    return apply_floor(assign_typed(gt, pred), gt.size(), pred.size(), min_iou);
}

}  // namespace topoforge
