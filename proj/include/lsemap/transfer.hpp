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

#ifndef LSEMAP_TRANSFER_HPP
#define LSEMAP_TRANSFER_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "lsemap/error.hpp"
#include "lsemap/gp.hpp"
#include "lsemap/grid.hpp"

namespace lsemap {

/// Measurements from a previously mapped surface together with the GP fitted
/// to exactly those pairs.
struct SourceDataset {
    LabeledDataset data;
    GpPosterior posterior;

    static SourceDataset fit_with(LabeledDataset data, const KernelParams& params) {
        if (data.empty())
            throw InvalidConfig("source dataset is empty");
        GpPosterior post = lsemap::fit(params, data);
        return {std::move(data), std::move(post)};
    }

    /// Fits the source GP with hyperparameters chosen from the default grid.
    static SourceDataset fit_auto(LabeledDataset data, double domain_diagonal) {
        if (data.empty())
            throw InvalidConfig("source dataset is empty");
        const auto grid = default_search_grid(data.values, domain_diagonal);
        const KernelParams params =
            data.size() >= 2 ? select_hyperparameters(data, grid) : default_kernel_params(data.values, domain_diagonal);
        return fit_with(std::move(data), params);
    }

    std::size_t size() const { return data.size(); }
};

/// Every `stride`-th pair of `data` in its stored order, starting with the first.
inline LabeledDataset thin(const LabeledDataset& data, std::size_t stride) {
    if (stride == 0)
        throw InvalidConfig("thinning stride must be at least 1");
    if (stride == 1)
        return data;
    LabeledDataset out;
    for (std::size_t i = 0; i < data.size(); i += stride)
        out.add(data.points[i], data.values[i], data.extra_noise_at(i));
    return out;
}

/// f''(x) = scale * f'(x) + location.
struct LocationScaleShift {
    double scale = 1.0;
    double location = 0.0;

    double apply(double v) const { return scale * v + location; }

    friend bool operator==(const LocationScaleShift&, const LocationScaleShift&) = default;
};

enum class TransferStatus { Ok, EmptyTarget, DegenerateDesign };

/// Which source value the difference correction is added to when a shift is
/// active: the shifted value scale*y' + location, or the raw y'.
enum class LssBase { Shifted, Raw };

/// Source points relabelled as pseudo-target observations.
struct TransformedDataset {
    std::vector<Position> points;
    std::vector<double> values;
    /// sigma'^2 at each source point.
    std::vector<double> source_variance;
    /// Target noise sigma^2 the transformation was computed with.
    double target_noise = 0.0;
    LocationScaleShift shift;
    TransferStatus status = TransferStatus::Ok;

    std::size_t size() const { return points.size(); }
    double per_point_noise(std::size_t j) const { return target_noise + source_variance[j]; }
};

struct LssFit {
    LocationScaleShift shift;
    bool degenerate = false;
};

namespace detail {

inline std::vector<Prediction> predict_all(const GpPosterior& model, std::span<const Position> xs) {
    std::vector<double> mean(xs.size()), var(xs.size());
    model.predict(xs, mean, var);
    std::vector<Prediction> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        out[i] = {mean[i], var[i]};
    return out;
}

}  // namespace detail

/// Least-squares (scale, location) mapping the source posterior mean at the
/// target points onto the target values. Falls back to scale 1 and the mean
/// residual when the source mean barely varies over the target points.
inline LssFit lss_fit(const LabeledDataset& target, const SourceDataset& source) {
    if (target.empty())
        return {{1.0, 0.0}, true};
    const auto mu = detail::predict_all(source.posterior, target.points);
    const auto n = static_cast<double>(target.size());
    double mean_mu = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        mean_mu += mu[i].mean;
        mean_y += target.values[i];
    }
    mean_mu /= n;
    mean_y /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double dm = mu[i].mean - mean_mu;
        sxx += dm * dm;
        sxy += dm * (target.values[i] - mean_y);
    }
    if (sxx / n < 1e-12)
        return {{1.0, mean_y - mean_mu}, true};
    const double scale = sxy / sxx;
    return {{scale, mean_y - scale * mean_mu}, false};
}

/// Shared route for both transfer variants: fits the difference GP to the
/// residuals y - (scale mu'(x) + location) and relabels every source point.
inline TransformedDataset transform_with_shift(const LabeledDataset& target, const SourceDataset& source,
                                               const KernelParams& params, const LocationScaleShift& shift,
                                               LssBase base) {
    params.validate();
    TransformedDataset out;
    out.points = source.data.points;
    out.target_noise = params.noise_variance;
    out.shift = shift;

    const auto at_source = detail::predict_all(source.posterior, source.data.points);
    out.source_variance.resize(source.size());
    for (std::size_t j = 0; j < source.size(); ++j)
        out.source_variance[j] = at_source[j].variance;

    std::vector<double> base_values(source.size());
    for (std::size_t j = 0; j < source.size(); ++j)
        base_values[j] = base == LssBase::Shifted ? shift.apply(source.data.values[j]) : source.data.values[j];

    if (target.empty()) {
        out.values = std::move(base_values);
        out.status = TransferStatus::EmptyTarget;
        return out;
    }

    const auto at_target = detail::predict_all(source.posterior, target.points);
    LabeledDataset residuals;
    residuals.points = target.points;
    residuals.values.resize(target.size());
    residuals.extra_noise.resize(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        residuals.values[i] = target.values[i] - shift.apply(at_target[i].mean);
        residuals.extra_noise[i] = at_target[i].variance + target.extra_noise_at(i);
    }
    const GpPosterior difference = lsemap::fit(params, residuals);

    std::vector<double> correction(source.size()), unused(source.size());
    difference.predict(source.data.points, correction, unused);
    out.values.resize(source.size());
    for (std::size_t j = 0; j < source.size(); ++j)
        out.values[j] = base_values[j] + correction[j];
    return out;
}

/// Diff-GP relabelling of the source data.
inline TransformedDataset diff_gp_transform(const LabeledDataset& target, const SourceDataset& source,
                                            const KernelParams& params) {
    return transform_with_shift(target, source, params, {}, LssBase::Shifted);
}

/// Diff-GP after a least-squares location-scale alignment of the source.
inline TransformedDataset lss_diff_gp_transform(const LabeledDataset& target, const SourceDataset& source,
                                                const KernelParams& params, LssBase base = LssBase::Shifted) {
    const LssFit ls = lss_fit(target, source);
    TransformedDataset out = transform_with_shift(target, source, params, ls.shift, base);
    if (out.status == TransferStatus::Ok && ls.degenerate)
        out.status = TransferStatus::DegenerateDesign;
    return out;
}

/// Target observations followed by the transformed source points; the latter
/// carry sigma'^2 as extra per-point noise.
inline LabeledDataset augment(const LabeledDataset& target, const TransformedDataset& transformed) {
    LabeledDataset out = target;
    if (transformed.size() == 0)
        return out;
    if (out.extra_noise.empty())
        out.extra_noise.assign(out.size(), 0.0);
    out.points.insert(out.points.end(), transformed.points.begin(), transformed.points.end());
    out.values.insert(out.values.end(), transformed.values.begin(), transformed.values.end());
    out.extra_noise.insert(out.extra_noise.end(), transformed.source_variance.begin(),
                           transformed.source_variance.end());
    return out;
}

}  // namespace lsemap

#endif  // LSEMAP_TRANSFER_HPP
