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

#ifndef LSEMAP_LEVEL_SET_HPP
#define LSEMAP_LEVEL_SET_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lsemap/error.hpp"
#include "lsemap/gp.hpp"
#include "lsemap/grid.hpp"

namespace lsemap {

/// Multiplier of the posterior sd giving a 95% credible band.
inline constexpr double kCredibleZ = 1.96;

struct CredibleInterval {
    double mean = 0.0;
    double halfwidth = 0.0;

    static CredibleInterval from_posterior(double mean, double sd) { return {mean, kCredibleZ * sd}; }

    double lower() const { return mean - halfwidth; }
    double upper() const { return mean + halfwidth; }
};

/// Straddle score 1.96 sd - |mean - threshold|. Negative when the interval misses the threshold.
inline double straddle(const CredibleInterval& q, double threshold) {
    return q.halfwidth - std::abs(q.mean - threshold);
}

/// Smaller overhang of the credible interval across the threshold; zero when
/// the interval lies entirely on one side.
inline double violation(const CredibleInterval& q, double threshold) {
    return std::min(std::max(0.0, threshold - q.lower()), std::max(0.0, q.upper() - threshold));
}

enum class Label : std::uint8_t { Undetermined = 0, Upper = 1, Lower = 2 };

inline char label_char(Label l) {
    switch (l) {
    case Label::Upper: return 'U';
    case Label::Lower: return 'L';
    default: return 'C';
    }
}

/// Three-way split of the grid into the super-level set, the sub-level set
/// and the undetermined remainder. Stored as one label per grid index, which
/// keeps the three sets disjoint and exhaustive by construction.
class LevelSetPartition {
public:
    LevelSetPartition() = default;
    LevelSetPartition(std::size_t n, double threshold, double margin = 0.0)
        : threshold_(threshold), margin_(margin), labels_(n, Label::Undetermined), undetermined_(n) {
        if (!std::isfinite(threshold))
            throw InvalidConfig("threshold must be finite");
        if (!(margin >= 0.0) || !std::isfinite(margin))
            throw InvalidConfig("margin must be finite and non-negative");
    }

    double threshold() const { return threshold_; }
    double margin() const { return margin_; }
    std::size_t size() const { return labels_.size(); }
    Label label(std::size_t i) const { return labels_.at(i); }
    std::span<const Label> labels() const { return labels_; }

    std::size_t upper_count() const { return upper_; }
    std::size_t lower_count() const { return lower_; }
    std::size_t undetermined_count() const { return undetermined_; }
    bool converged() const { return undetermined_ == 0; }

    std::vector<std::size_t> upper_set() const { return collect(Label::Upper); }
    std::vector<std::size_t> lower_set() const { return collect(Label::Lower); }
    std::vector<std::size_t> undetermined_set() const { return collect(Label::Undetermined); }

    void assign(std::size_t i, Label l) {
        Label& cur = labels_.at(i);
        counter(cur) -= 1;
        cur = l;
        counter(cur) += 1;
    }

    void reset() {
        std::fill(labels_.begin(), labels_.end(), Label::Undetermined);
        upper_ = lower_ = 0;
        undetermined_ = labels_.size();
    }

    friend bool operator==(const LevelSetPartition&, const LevelSetPartition&) = default;

private:
    std::size_t& counter(Label l) {
        switch (l) {
        case Label::Upper: return upper_;
        case Label::Lower: return lower_;
        default: return undetermined_;
        }
    }

    std::vector<std::size_t> collect(Label l) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == l)
                out.push_back(i);
        return out;
    }

    double threshold_ = 0.0;
    double margin_ = 0.0;
    std::vector<Label> labels_;
    std::size_t upper_ = 0;
    std::size_t lower_ = 0;
    std::size_t undetermined_ = 0;
};

/// Decision for a single interval: Upper if lower + margin >= threshold,
/// Lower if upper - margin < threshold, otherwise undetermined.
inline Label classify(const CredibleInterval& q, double threshold, double margin) {
    if (q.lower() + margin >= threshold)
        return Label::Upper;
    if (q.upper() - margin < threshold)
        return Label::Lower;
    return Label::Undetermined;
}

/// Classifies every undetermined index from posterior means and sds over the
/// grid. Already-determined indices are left alone.
inline LevelSetPartition classify_all(std::span<const double> means, std::span<const double> sds,
                                      LevelSetPartition partition) {
    if (means.size() != partition.size() || sds.size() != partition.size())
        throw InvalidConfig("posterior arrays do not match the partition size");
    for (std::size_t i = 0; i < partition.size(); ++i) {
        if (partition.label(i) != Label::Undetermined)
            continue;
        const Label l = classify(CredibleInterval::from_posterior(means[i], sds[i]), partition.threshold(),
                                 partition.margin());
        if (l != Label::Undetermined)
            partition.assign(i, l);
    }
    return partition;
}

/// Posterior mean and sd at every grid index.
struct GridPosterior {
    std::vector<double> mean;
    std::vector<double> sd;
};

template <StationaryKernel Kernel>
GridPosterior predict_grid(const BasicGpPosterior<Kernel>& model, const GridDomain& domain) {
    std::vector<Position> xs(domain.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        xs[i] = domain.point_at(i);
    GridPosterior out{std::vector<double>(xs.size()), std::vector<double>(xs.size())};
    model.predict(xs, out.mean, out.sd);
    for (double& v : out.sd)
        v = std::sqrt(v);
    return out;
}

inline GridPosterior prior_grid(const KernelParams& params, const GridDomain& domain) {
    return {std::vector<double>(domain.size(), 0.0), std::vector<double>(domain.size(), std::sqrt(params.amplitude))};
}

template <StationaryKernel Kernel>
LevelSetPartition classify_all(const BasicGpPosterior<Kernel>& model, const GridDomain& domain,
                               LevelSetPartition partition) {
    const GridPosterior g = predict_grid(model, domain);
    return classify_all(g.mean, g.sd, std::move(partition));
}

/// Unmeasured index with the largest straddle; ties go to the lowest index.
/// `measured` holds one flag per grid index.
inline std::size_t select_next(std::span<const double> means, std::span<const double> sds,
                               std::span<const char> measured, double threshold) {
    if (means.size() != sds.size() || means.size() != measured.size())
        throw InvalidConfig("posterior arrays do not match the grid size");
    std::size_t best = means.size();
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < means.size(); ++i) {
        if (measured[i])
            continue;
        const double s = straddle(CredibleInterval::from_posterior(means[i], sds[i]), threshold);
        if (best == means.size() || s > best_score) {
            best = i;
            best_score = s;
        }
    }
    if (best == means.size())
        throw Exhausted("every grid point has been measured");
    return best;
}

template <StationaryKernel Kernel>
std::size_t select_next(const BasicGpPosterior<Kernel>& model, const GridDomain& domain,
                        std::span<const char> measured, double threshold) {
    const GridPosterior g = predict_grid(model, domain);
    return select_next(g.mean, g.sd, measured, threshold);
}

}  // namespace lsemap

#endif  // LSEMAP_LEVEL_SET_HPP
