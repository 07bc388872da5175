/*
 * Copyright 2026 The lsemap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#ifndef LSEMAP_METRICS_HPP
#define LSEMAP_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsemap/error.hpp"
#include "lsemap/level_set.hpp"

namespace lsemap {

/// Six-cell table. Rows: truth positive (f >= threshold) / negative.
/// Columns: predicted upper / undetermined / lower.
struct ConfusionCounts {
    std::uint64_t tp = 0, up = 0, fn = 0;
    std::uint64_t fp = 0, un = 0, tn = 0;

    std::uint64_t total() const { return tp + up + fn + fp + un + tn; }

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// A metric that is undefined when its denominator is zero.
using Metric = std::optional<double>;

struct ScoreSet {
    Metric sensitivity;
    Metric specificity;
    Metric f1;
};

namespace detail {
inline Metric ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0)
        return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace detail

/// `truth[i]` is true when grid point i lies in the super-level set.
inline ConfusionCounts confusion(const LevelSetPartition& partition, std::span<const char> truth) {
    if (truth.size() != partition.size())
        throw InvalidConfig("ground truth does not cover every grid point");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const Label l = partition.label(i);
        if (truth[i])
            (l == Label::Upper ? c.tp : l == Label::Lower ? c.fn : c.up) += 1;
        else
            (l == Label::Upper ? c.fp : l == Label::Lower ? c.tn : c.un) += 1;
    }
    return c;
}

/// Undetermined points treated as defective: UP joins the false negatives,
/// UN joins the true negatives.
inline ScoreSet risk_sensitive(const ConfusionCounts& c) {
    return {detail::ratio(c.tp, c.tp + c.up + c.fn), detail::ratio(c.tn + c.un, c.tn + c.fp + c.un),
            detail::ratio(2 * c.tp, 2 * c.tp + c.fp + c.up + c.fn)};
}

/// Undetermined points treated as normal: UP joins the true positives,
/// UN joins the false positives.
inline ScoreSet cost_sensitive(const ConfusionCounts& c) {
    const std::uint64_t pos = c.tp + c.up;
    return {detail::ratio(pos, pos + c.fn), detail::ratio(c.tn, c.tn + c.fp + c.un),
            detail::ratio(2 * pos, 2 * pos + c.fp + c.un + c.fn)};
}

enum class AucMode { Risk, Cost };

/// Rank-based (Mann-Whitney) AUC of `scores` against `truth`; tied pairs count
/// one half. Undefined when either class is empty.
inline Metric auc(std::span<const double> scores, std::span<const char> truth) {
    if (scores.size() != truth.size())
        throw InvalidConfig("scores and truth differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Sum of mid-ranks of positives, ranks starting at 1.
    double rank_sum = 0.0;
    std::uint64_t pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]])
            ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (truth[order[k]]) {
                rank_sum += mid;
                ++pos;
            }
        i = j;
    }
    const std::uint64_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0)
        return std::nullopt;
    const double p = static_cast<double>(pos);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

/// Posterior-mean scores with undetermined points pushed to -inf (risk) or +inf (cost).
inline std::vector<double> level_set_scores(const LevelSetPartition& partition, std::span<const double> means,
                                            AucMode mode) {
    if (means.size() != partition.size())
        throw InvalidConfig("posterior means do not match the partition size");
    const double fill = mode == AucMode::Risk ? -std::numeric_limits<double>::infinity()
                                              : std::numeric_limits<double>::infinity();
    std::vector<double> s(means.begin(), means.end());
    for (std::size_t i = 0; i < s.size(); ++i)
        if (partition.label(i) == Label::Undetermined)
            s[i] = fill;
    return s;
}

inline Metric auc(const LevelSetPartition& partition, std::span<const double> means, std::span<const char> truth,
                  AucMode mode) {
    const auto s = level_set_scores(partition, means, mode);
    return auc(s, truth);
}

struct MetricRecord {
    std::size_t step = 0;
    std::size_t n_measured = 0;
    ScoreSet risk;
    ScoreSet cost;
    Metric auc_risk;
    Metric auc_cost;
    ConfusionCounts counts;
};

inline MetricRecord evaluate(std::size_t step, std::size_t n_measured, const LevelSetPartition& partition,
                             std::span<const double> means, std::span<const char> truth) {
    MetricRecord r;
    r.step = step;
    r.n_measured = n_measured;
    r.counts = confusion(partition, truth);
    r.risk = risk_sensitive(r.counts);
    r.cost = cost_sensitive(r.counts);
    r.auc_risk = auc(partition, means, truth, AucMode::Risk);
    r.auc_cost = auc(partition, means, truth, AucMode::Cost);
    return r;
}

using MetricCurve = std::vector<MetricRecord>;

inline constexpr const char* kMetricCsvHeader =
    "step,n_measured,sens_risk,spec_risk,f1_risk,auc_risk,sens_cost,spec_cost,f1_cost,auc_cost";

inline std::string format_metric(const Metric& m) {
    if (!m)
        return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", *m);
    return buf;
}

inline std::string metric_csv_row(const MetricRecord& r) {
    std::string s = std::to_string(r.step) + ',' + std::to_string(r.n_measured);
    for (const Metric* m : {&r.risk.sensitivity, &r.risk.specificity, &r.risk.f1, &r.auc_risk, &r.cost.sensitivity,
                            &r.cost.specificity, &r.cost.f1, &r.auc_cost})
        s += ',' + format_metric(*m);
    return s;
}

}  // namespace lsemap

#endif  // LSEMAP_METRICS_HPP
