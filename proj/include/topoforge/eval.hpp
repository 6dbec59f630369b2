#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "topoforge/anomaly.hpp"
#include "topoforge/assignment.hpp"
#include "topoforge/errors.hpp"

namespace topoforge::eval {

// Threshold comparisons allow this much slack so that IoU values landing
// exactly on a binary-inexact boundary (0.6 vs 0.50 + 2*0.05) still count.
inline constexpr double kTauSlack = 1e-12;

struct EvalSample {
    std::string id;
    std::vector<Anomaly> gt;
    std::vector<Anomaly> pred;
};

struct TypeCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
};

/// Per-type TP/FP/FN for one sample at one acceptance threshold. Reuses the
/// same type-aware assignment as the reward path; a prediction overlapping a
/// ground truth of another type counts as both FP and FN.
inline std::array<TypeCounts, 4> match_eval(std::span<const Anomaly> gt, std::span<const Anomaly> pred,
                                            double tau) {
    const MatchResult res = match_typed(gt, pred, tau - kTauSlack);
    std::array<TypeCounts, 4> counts{};
    for (const auto& p : res.pairs) ++counts[std::size_t(gt[std::size_t(p.gt)].type)].tp;
    for (const int i : res.false_negatives) ++counts[std::size_t(gt[std::size_t(i)].type)].fn;
    for (const int j : res.false_positives) ++counts[std::size_t(pred[std::size_t(j)].type)].fp;
    return counts;
}

struct MicroMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long tp = 0;
    long fp = 0;
    long fn = 0;
};

struct MetricsReport {
    std::vector<double> report_taus;
    std::vector<MicroMetrics> micro;  // parallel to report_taus
    double af1 = 0.0;
    std::array<double, 4> per_type_f1{};   // at tau = 0.5
    std::array<bool, 4> type_present{};    // TP + FN > 0
    double macro_f1 = 0.0;
    double count_accuracy = 0.0;
    double count_mae = 0.0;
    double mps_f1 = 0.0;  // mean per-sample F1 at 0.5, both-empty samples score 1
    double negative_accuracy = 0.0;
    long negative_samples = 0;
    double mean_iou = 0.0;  // over accepted matches at 0.5
    long matched_pairs = 0;  // accepted matches at 0.5
    long sample_count = 0;
    bool degenerate = false;  // no ground truth and no predictions anywhere

    /// Flat key-value view in a stable, documented order.
    std::vector<std::pair<std::string, double>> flat() const {
        std::vector<std::pair<std::string, double>> kv;
        auto tau_tag = [](double tau) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%.2f", tau);
            return std::string(buf);
        };
        kv.emplace_back("samples", double(sample_count));
        for (std::size_t i = 0; i < report_taus.size(); ++i) {
            const std::string tag = tau_tag(report_taus[i]);
            kv.emplace_back("micro_precision@" + tag, micro[i].precision);
            kv.emplace_back("micro_recall@" + tag, micro[i].recall);
            kv.emplace_back("micro_f1@" + tag, micro[i].f1);
        }
        kv.emplace_back("af1", af1);
        for (const AnomalyType t : kAnomalyTypes)
            kv.emplace_back("f1_" + std::string(to_label(t)) + "@0.50", per_type_f1[std::size_t(t)]);
        kv.emplace_back("macro_f1@0.50", macro_f1);
        kv.emplace_back("count_accuracy", count_accuracy);
        kv.emplace_back("count_mae", count_mae);
        kv.emplace_back("mps_f1@0.50", mps_f1);
        kv.emplace_back("negative_sample_accuracy", negative_accuracy);
        kv.emplace_back("negative_samples", double(negative_samples));
        kv.emplace_back("mean_matched_iou@0.50", mean_iou);
        kv.emplace_back("matched_pairs@0.50", double(matched_pairs));
        kv.emplace_back("degenerate", degenerate ? 1.0 : 0.0);
        return kv;
    }
};

namespace detail {

inline double f1_from(long tp, long fp, long fn) {
    if (tp == 0) return 0.0;
    const double p = double(tp) / double(tp + fp);
    const double r = double(tp) / double(tp + fn);
    return 2.0 * p * r / (p + r);
}

}  // namespace detail

inline std::vector<double> coco_taus() {
    std::vector<double> taus;
    for (int k = 0; k <= 9; ++k) taus.push_back(0.50 + 0.05 * k);
    return taus;
}

/// Full protocol over a dataset: micro P/R/F1 at the report thresholds, aF1
/// over the ten COCO thresholds, per-type and macro F1 at 0.5, count accuracy
/// and MAE, mean per-sample F1, negative-sample accuracy, and mean matched IoU.
/// The per-sample assignment is computed once and filtered per threshold.
inline MetricsReport evaluate(std::span<const EvalSample> samples,
                              std::span<const double> report_taus_in = {}) {
    static const std::vector<double> kDefaultTaus{0.3, 0.5, 0.75};
    std::vector<double> report_taus(report_taus_in.begin(), report_taus_in.end());
    if (report_taus.empty()) report_taus = kDefaultTaus;

    std::set<std::string> ids;
    for (const auto& s : samples)
        if (!ids.insert(s.id).second) throw ValidationError("duplicate sample id: " + s.id);

    const std::vector<double> coco = coco_taus();
    std::vector<double> all_taus = report_taus;
    all_taus.insert(all_taus.end(), coco.begin(), coco.end());
    all_taus.push_back(0.5);
    std::sort(all_taus.begin(), all_taus.end());
    all_taus.erase(std::unique(all_taus.begin(), all_taus.end()), all_taus.end());

    // tallies[tau index][type]
    std::vector<std::array<TypeCounts, 4>> tallies(all_taus.size());
    auto tau_index = [&](double tau) {
        return std::size_t(std::lower_bound(all_taus.begin(), all_taus.end(), tau) - all_taus.begin());
    };

    MetricsReport rep;
    rep.report_taus = report_taus;
    rep.sample_count = long(samples.size());

    long exact_count = 0, negative_total = 0, negative_correct = 0;
    double mae_sum = 0.0, ps_f1_sum = 0.0, iou_sum = 0.0;
    long matched_half = 0;
    long long total_gt = 0, total_pred = 0;

    for (const auto& s : samples) {
        total_gt += long(s.gt.size());
        total_pred += long(s.pred.size());
        const auto assignment = assign_typed(s.gt, s.pred);
        for (std::size_t ti = 0; ti < all_taus.size(); ++ti) {
            const MatchResult res = apply_floor(assignment, s.gt.size(), s.pred.size(), all_taus[ti] - kTauSlack);
            auto& per_type = tallies[ti];
            for (const auto& p : res.pairs) ++per_type[std::size_t(s.gt[std::size_t(p.gt)].type)].tp;
            for (const int i : res.false_negatives) ++per_type[std::size_t(s.gt[std::size_t(i)].type)].fn;
            for (const int j : res.false_positives) ++per_type[std::size_t(s.pred[std::size_t(j)].type)].fp;
        }

        if (s.gt.size() == s.pred.size()) ++exact_count;
        mae_sum += std::abs(double(s.gt.size()) - double(s.pred.size()));
        if (s.gt.empty()) {
            ++negative_total;
            if (s.pred.empty()) ++negative_correct;
        }

        const MatchResult at_half = apply_floor(assignment, s.gt.size(), s.pred.size(), 0.5 - kTauSlack);
        for (const auto& p : at_half.pairs) {
            iou_sum += p.iou;
            ++matched_half;
        }
        if (s.gt.empty() && s.pred.empty()) {
            ps_f1_sum += 1.0;
        } else {
            const long tp = long(at_half.pairs.size());
            ps_f1_sum += detail::f1_from(tp, long(s.pred.size()) - tp, long(s.gt.size()) - tp);
        }
    }

    auto micro_at = [&](double tau) {
        const auto& per_type = tallies[tau_index(tau)];
        long tp = 0, fp = 0, fn = 0;
        for (const auto& c : per_type) {
            tp += c.tp;
            fp += c.fp;
            fn += c.fn;
        }
        MicroMetrics m;
        m.tp = tp;
        m.fp = fp;
        m.fn = fn;
        m.precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
        m.recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
        m.f1 = detail::f1_from(tp, fp, fn);
        return m;
    };

    for (const double tau : report_taus) rep.micro.push_back(micro_at(tau));

    double af1_sum = 0.0;
    for (const double tau : coco) af1_sum += micro_at(tau).f1;
    rep.af1 = af1_sum / double(coco.size());

    const auto& half = tallies[tau_index(0.5)];
    double macro_sum = 0.0;
    int macro_n = 0;
    for (std::size_t t = 0; t < 4; ++t) {
        rep.per_type_f1[t] = detail::f1_from(half[t].tp, half[t].fp, half[t].fn);
        rep.type_present[t] = half[t].tp + half[t].fn > 0;
        if (rep.type_present[t]) {
            macro_sum += rep.per_type_f1[t];
            ++macro_n;
        }
    }
    rep.macro_f1 = macro_n > 0 ? macro_sum / double(macro_n) : 0.0;

    const long n = long(samples.size());
    rep.count_accuracy = n > 0 ? double(exact_count) / double(n) : 0.0;
    rep.count_mae = n > 0 ? mae_sum / double(n) : 0.0;
    rep.mps_f1 = n > 0 ? ps_f1_sum / double(n) : 0.0;
    rep.negative_samples = negative_total;
    rep.negative_accuracy = negative_total > 0 ? double(negative_correct) / double(negative_total) : 1.0;
    rep.matched_pairs = matched_half;
    rep.mean_iou = matched_half > 0 ? iou_sum / double(matched_half) : 0.0;
    rep.degenerate = total_gt == 0 && total_pred == 0;
    return rep;
}

}  // namespace topoforge::eval
