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

#ifndef LSEMAP_GP_HPP
#define LSEMAP_GP_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "lsemap/error.hpp"
#include "lsemap/grid.hpp"

namespace lsemap {

/// Hyperparameters of a stationary kernel plus the homoscedastic noise level.
struct KernelParams {
    double amplitude = 1.0;       // v, squared output units
    double length_scale = 1.0;    // same units as positions
    double noise_variance = 0.0;  // sigma^2, squared output units

    bool valid() const {
        return amplitude > 0.0 && length_scale > 0.0 && noise_variance >= 0.0 && std::isfinite(amplitude) &&
               std::isfinite(length_scale) && std::isfinite(noise_variance);
    }

    void validate() const {
        if (!valid())
            throw InvalidConfig("kernel parameters require amplitude > 0, length_scale > 0, noise_variance >= 0");
    }

    friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

/// Squared-exponential kernel v * exp(-|a - b|^2 / (2 l^2)).
class RbfKernel {
public:
    explicit RbfKernel(const KernelParams& p)
        : amplitude_(p.amplitude), inv_two_l2_(1.0 / (2.0 * p.length_scale * p.length_scale)) {}

    double operator()(const Position& a, const Position& b) const {
        return amplitude_ * std::exp(-squared_distance(a, b) * inv_two_l2_);
    }

    double prior_variance() const { return amplitude_; }

private:
    double amplitude_;
    double inv_two_l2_;
};

/// Seam for alternative stationary kernels; only RbfKernel ships.
template <class K>
concept StationaryKernel = std::constructible_from<K, const KernelParams&> && requires(const K k, Position a) {
    { k(a, a) } -> std::convertible_to<double>;
    { k.prior_variance() } -> std::convertible_to<double>;
};

inline double kernel_eval(const KernelParams& p, const Position& a, const Position& b) { return RbfKernel(p)(a, b); }

/// Ordered measurement pairs. `extra_noise` is either empty (all zeros) or
/// holds a per-point variance added on top of the kernel's noise_variance.
struct LabeledDataset {
    std::vector<Position> points;
    std::vector<double> values;
    std::vector<double> extra_noise;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    double extra_noise_at(std::size_t i) const { return extra_noise.empty() ? 0.0 : extra_noise[i]; }

    void add(const Position& p, double y, double extra = 0.0) {
        if (extra != 0.0 && extra_noise.empty())
            extra_noise.assign(points.size(), 0.0);
        points.push_back(p);
        values.push_back(y);
        if (!extra_noise.empty())
            extra_noise.push_back(extra);
    }

    void validate() const {
        if (points.size() != values.size())
            throw InvalidConfig("dataset points and values differ in length");
        if (!extra_noise.empty() && extra_noise.size() != points.size())
            throw InvalidConfig("per-point noise length does not match dataset length");
        for (double e : extra_noise)
            if (!(e >= 0.0) || !std::isfinite(e))
                throw InvalidConfig("per-point noise must be finite and non-negative");
        for (double y : values)
            if (!std::isfinite(y))
                throw ValueNotFinite("dataset contains a non-finite value");
    }
};

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;

    double sd() const { return std::sqrt(variance); }
};

/// Prior mean evaluated away from the training points. Empty means zero.
using PriorMeanFn = std::function<double(const Position&)>;

namespace detail {
inline constexpr double kInitialJitter = 1e-9;
inline constexpr double kMaxJitter = 1e-5;
}  // namespace detail

template <StationaryKernel Kernel>
class BasicGpPosterior;

template <StationaryKernel Kernel = RbfKernel>
BasicGpPosterior<Kernel> fit(const KernelParams& params, const LabeledDataset& data,
                             std::span<const double> prior_mean = {}, PriorMeanFn extension = {});

/// Exact GP posterior conditioned on a dataset. Immutable once fitted, so a
/// single instance may be queried from many threads.
template <StationaryKernel Kernel = RbfKernel>
class BasicGpPosterior {
public:
    const KernelParams& params() const { return params_; }
    const LabeledDataset& training() const { return training_; }
    /// Lower Cholesky factor of K + diag(noise) + jitter * I.
    const Eigen::MatrixXd& factor() const { return factor_; }
    const Eigen::VectorXd& dual_weights() const { return dual_weights_; }
    const Eigen::VectorXd& prior_mean_at_points() const { return prior_mean_; }
    /// Absolute jitter that was added to the Gram diagonal.
    double jitter() const { return jitter_; }

    Prediction predict(const Position& x) const {
        const Kernel k(params_);
        const auto n = static_cast<Eigen::Index>(training_.size());
        Eigen::VectorXd kx(n);
        for (Eigen::Index i = 0; i < n; ++i)
            kx[i] = k(x, training_.points[static_cast<std::size_t>(i)]);
        const double prior = k.prior_variance();
        const double mean = extension_value(x) + kx.dot(dual_weights_);
        factor_.template triangularView<Eigen::Lower>().solveInPlace(kx);
        return {mean, std::clamp(prior - kx.squaredNorm(), 0.0, prior)};
    }

    /// Batched prediction; writes into caller-provided spans of equal length.
    void predict(std::span<const Position> xs, std::span<double> means, std::span<double> variances) const {
        constexpr std::size_t kChunk = 512;
        const Kernel k(params_);
        const double prior = k.prior_variance();
        const auto n = static_cast<Eigen::Index>(training_.size());
        for (std::size_t start = 0; start < xs.size(); start += kChunk) {
            const std::size_t m = std::min(kChunk, xs.size() - start);
            Eigen::MatrixXd cross(n, static_cast<Eigen::Index>(m));
            for (std::size_t j = 0; j < m; ++j)
                for (Eigen::Index i = 0; i < n; ++i)
                    cross(i, static_cast<Eigen::Index>(j)) = k(xs[start + j], training_.points[static_cast<std::size_t>(i)]);
            const Eigen::VectorXd mu = cross.transpose() * dual_weights_;
            factor_.template triangularView<Eigen::Lower>().solveInPlace(cross);
            const Eigen::VectorXd reduction = cross.colwise().squaredNorm().transpose();
            for (std::size_t j = 0; j < m; ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                means[start + j] = extension_value(xs[start + j]) + mu[jj];
                variances[start + j] = std::clamp(prior - reduction[jj], 0.0, prior);
            }
        }
    }

    /// log p(y | X, params) under the fitted Gaussian model.
    double log_marginal_likelihood() const {
        const auto n = static_cast<double>(training_.size());
        Eigen::VectorXd residual(static_cast<Eigen::Index>(training_.size()));
        for (std::size_t i = 0; i < training_.size(); ++i)
            residual[static_cast<Eigen::Index>(i)] = training_.values[i] - prior_mean_[static_cast<Eigen::Index>(i)];
        const double log_det_half = factor_.diagonal().array().log().sum();
        return -0.5 * residual.dot(dual_weights_) - log_det_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
    }

private:
    friend BasicGpPosterior fit<Kernel>(const KernelParams&, const LabeledDataset&, std::span<const double>,
                                        PriorMeanFn);

    double extension_value(const Position& x) const { return extension_ ? extension_(x) : 0.0; }

    KernelParams params_;
    LabeledDataset training_;
    Eigen::MatrixXd factor_;
    Eigen::VectorXd dual_weights_;
    Eigen::VectorXd prior_mean_;
    PriorMeanFn extension_;
    double jitter_ = 0.0;
};

using GpPosterior = BasicGpPosterior<RbfKernel>;

template <StationaryKernel Kernel>
BasicGpPosterior<Kernel> fit(const KernelParams& params, const LabeledDataset& data, std::span<const double> prior_mean,
                             PriorMeanFn extension) {
    params.validate();
    data.validate();
    if (data.empty())
        throw InvalidConfig("cannot fit a GP to an empty dataset");
    if (!prior_mean.empty() && prior_mean.size() != data.size())
        throw InvalidConfig("prior mean length does not match dataset length");

    const Kernel k(params);
    const auto n = static_cast<Eigen::Index>(data.size());
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& pi = data.points[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j <= i; ++j)
            gram(i, j) = k(pi, data.points[static_cast<std::size_t>(j)]);
        gram(i, i) += params.noise_variance + data.extra_noise_at(static_cast<std::size_t>(i));
    }

    const double scale = k.prior_variance();
    Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt;
    double jitter = detail::kInitialJitter * scale;
    bool ok = false;
    for (; jitter <= detail::kMaxJitter * scale * (1.0 + 1e-12); jitter *= 10.0) {
        Eigen::MatrixXd regularized = gram;
        regularized.diagonal().array() += jitter;
        llt.compute(regularized);
        if (llt.info() == Eigen::Success) {
            const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
            if ((diag.array() > 0.0).all() && diag.allFinite()) {
                ok = true;
                break;
            }
        }
    }
    if (!ok)
        throw FactorizationFailure("regularized Gram matrix of " + std::to_string(n) +
                                   " points is not positive definite (v=" + std::to_string(params.amplitude) +
                                   ", l=" + std::to_string(params.length_scale) +
                                   ", noise=" + std::to_string(params.noise_variance) + ")");

    BasicGpPosterior<Kernel> post;
    post.params_ = params;
    post.training_ = data;
    post.factor_ = llt.matrixL();
    post.jitter_ = jitter;
    post.extension_ = std::move(extension);
    post.prior_mean_ = Eigen::VectorXd::Zero(n);
    if (!prior_mean.empty())
        for (Eigen::Index i = 0; i < n; ++i)
            post.prior_mean_[i] = prior_mean[static_cast<std::size_t>(i)];
    Eigen::VectorXd residual(n);
    for (Eigen::Index i = 0; i < n; ++i)
        residual[i] = data.values[static_cast<std::size_t>(i)] - post.prior_mean_[i];
    post.dual_weights_ = llt.solve(residual);
    return post;
}

template <StationaryKernel Kernel>
Prediction predict(const BasicGpPosterior<Kernel>& model, const Position& x) {
    return model.predict(x);
}

/// The zero-mean prior, i.e. the posterior of an empty dataset.
inline Prediction predict_prior(const KernelParams& params) { return {0.0, params.amplitude}; }

inline double log_marginal_likelihood(const KernelParams& params, const LabeledDataset& data) {
    return fit(params, data).log_marginal_likelihood();
}

/// Grid element with the largest log marginal likelihood. Candidates whose
/// factorization fails are skipped; ties keep the earliest candidate.
inline KernelParams select_hyperparameters(const LabeledDataset& data, std::span<const KernelParams> search_grid) {
    if (search_grid.empty())
        throw InvalidConfig("hyperparameter search grid is empty");
    if (search_grid.size() == 1)
        return search_grid.front();
    if (data.size() < 2)
        throw InvalidConfig("hyperparameter selection needs at least two observations");
    const KernelParams* best = nullptr;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (const auto& candidate : search_grid) {
        double lml;
        try {
            lml = log_marginal_likelihood(candidate, data);
        } catch (const FactorizationFailure&) {
            continue;
        }
        if (!std::isfinite(lml))
            continue;
        if (best == nullptr || lml > best_lml) {
            best = &candidate;
            best_lml = lml;
        }
    }
    if (best == nullptr)
        throw FactorizationFailure("every hyperparameter candidate failed to factorize");
    return *best;
}

/// Scale of the outputs about the zero prior mean: the mean of squared values,
/// or 1 when that is degenerate.
inline double output_scale(std::span<const double> values) {
    if (values.empty())
        return 1.0;
    double s = 0.0;
    for (double y : values)
        s += y * y;
    s /= static_cast<double>(values.size());
    return (s > 1e-300 && std::isfinite(s)) ? s : 1.0;
}

/// Log-spaced default grid: v in {1/4, 1, 4} x scale, l in {2.5, 5, 10, 20, 40}%
/// of the domain diagonal, noise in {0.1, 1, 10}% x scale. 45 candidates,
/// ordered amplitude-major.
inline std::vector<KernelParams> default_search_grid(std::span<const double> values, double domain_diagonal) {
    const double scale = output_scale(values);
    std::vector<KernelParams> grid;
    grid.reserve(45);
    for (double a : {0.25, 1.0, 4.0})
        for (double l : {0.025, 0.05, 0.10, 0.20, 0.40})
            for (double s : {0.001, 0.01, 0.10})
                grid.push_back({a * scale, l * domain_diagonal, s * scale});
    return grid;
}

/// Parameters used before enough data exists to run the selection.
inline KernelParams default_kernel_params(std::span<const double> values, double domain_diagonal) {
    const double scale = output_scale(values);
    return {scale, 0.10 * domain_diagonal, 0.01 * scale};
}

}  // namespace lsemap

#endif  // LSEMAP_GP_HPP
