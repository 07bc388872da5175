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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lsemap/transfer.hpp"

using namespace lsemap;

namespace {

double surface(const Position& x) { return std::sin(0.4 * x.x) + 0.5 * std::cos(0.3 * x.y) + 2.0; }

LabeledDataset lattice(std::size_t n, double spacing, double (*f)(const Position&)) {
    LabeledDataset d;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const Position x{c * spacing, r * spacing};
            d.add(x, f(x));
        }
    return d;
}

const KernelParams kSmooth{4.0, 3.0, 1e-6};

}  // namespace

TEST(DiffGp, EmptyTargetCopiesSource) {
    const auto source = SourceDataset::fit_with(lattice(6, 1.0, surface), kSmooth);
    const auto t = diff_gp_transform(LabeledDataset{}, source, kSmooth);
    EXPECT_EQ(t.status, TransferStatus::EmptyTarget);
    EXPECT_EQ(t.values, source.data.values);
    EXPECT_EQ(t.points, source.data.points);
    EXPECT_EQ(t.shift, (LocationScaleShift{1.0, 0.0}));
}

TEST(DiffGp, IdenticalFunctionsLeaveSourceUnchanged) {
    const auto source = SourceDataset::fit_with(lattice(8, 1.0, surface), kSmooth);
    LabeledDataset target;
    for (std::size_t i = 0; i < source.size(); i += 2)
        target.add(source.data.points[i], source.data.values[i]);
    const auto t = diff_gp_transform(target, source, kSmooth);
    EXPECT_EQ(t.status, TransferStatus::Ok);
    for (std::size_t j = 0; j < t.size(); ++j)
        EXPECT_NEAR(t.values[j], source.data.values[j], 1e-3);
}

TEST(DiffGp, ConstantOffsetIsTransferred) {
    const auto source = SourceDataset::fit_with(lattice(10, 1.0, surface), {25.0, 2.0, 1e-6});
    LabeledDataset target;
    std::vector<std::size_t> picks;
    for (std::size_t i = 0; i < source.size(); i += 11)
        picks.push_back(i);
    picks.resize(10);
    for (std::size_t i : picks)
        target.add(source.data.points[i], source.data.values[i] + 5.0);
    const auto t = diff_gp_transform(target, source, {25.0, 2.0, 1e-6});
    for (std::size_t i : picks)
        EXPECT_NEAR(t.values[i], source.data.values[i] + 5.0, 0.01);
}

TEST(DiffGp, TransformedNoiseDominatesTargetNoise) {
    const auto source = SourceDataset::fit_with(lattice(6, 1.5, surface), {4.0, 3.0, 0.05});
    LabeledDataset target;
    target.add({1.0, 1.0}, 3.0);
    target.add({4.0, 2.0}, 2.5);
    const auto t = diff_gp_transform(target, source, {4.0, 3.0, 0.05});
    for (std::size_t j = 0; j < t.size(); ++j) {
        EXPECT_GE(t.per_point_noise(j), 0.05);
        EXPECT_GE(t.source_variance[j], 0.0);
    }
}

TEST(DiffGp, AugmentedFitMatchesSourceAsTargetWhenFunctionsAgree) {
    const auto source = SourceDataset::fit_with(lattice(7, 1.0, surface), kSmooth);
    LabeledDataset target = source.data;
    const auto t = diff_gp_transform(target, source, kSmooth);
    const auto augmented = fit(kSmooth, augment(target, t));

    LabeledDataset plain = target;
    plain.extra_noise.assign(plain.size(), 0.0);
    for (std::size_t j = 0; j < source.size(); ++j)
        plain.add(t.points[j], t.values[j], t.source_variance[j]);
    const auto reference = fit(kSmooth, plain);
    for (const Position& x : std::vector<Position>{{0.5, 0.5}, {3.2, 4.1}, {6.0, 1.0}, {2.0, 2.0}}) {
        EXPECT_NEAR(augmented.predict(x).mean, reference.predict(x).mean, 1e-6);
        EXPECT_NEAR(augmented.predict(x).variance, reference.predict(x).variance, 1e-6);
    }
}

TEST(LssFit, IdentityAndAffineRecovery) {
    const auto source = SourceDataset::fit_with(lattice(6, 1.0, surface), kSmooth);
    std::vector<double> mu(source.size()), var(source.size());
    source.posterior.predict(source.data.points, mu, var);

    LabeledDataset same, affine;
    for (std::size_t i = 0; i < source.size(); i += 3) {
        same.add(source.data.points[i], mu[i]);
        affine.add(source.data.points[i], 2.0 * mu[i] + 1.0);
    }
    const LssFit id = lss_fit(same, source);
    EXPECT_FALSE(id.degenerate);
    EXPECT_NEAR(id.shift.scale, 1.0, 1e-10);
    EXPECT_NEAR(id.shift.location, 0.0, 1e-10);
    const LssFit af = lss_fit(affine, source);
    EXPECT_NEAR(af.shift.scale, 2.0, 1e-10);
    EXPECT_NEAR(af.shift.location, 1.0, 1e-10);

    LabeledDataset reversed;
    for (std::size_t k = affine.size(); k-- > 0;)
        reversed.add(affine.points[k], affine.values[k]);
    const LssFit rv = lss_fit(reversed, source);
    EXPECT_NEAR(rv.shift.scale, af.shift.scale, 1e-12);
    EXPECT_NEAR(rv.shift.location, af.shift.location, 1e-12);
}

TEST(LssFit, ConstantSourceIsDegenerate) {
    auto flat = [](const Position&) { return 3.0; };
    LabeledDataset src;
    for (int i = 0; i < 16; ++i)
        src.add({double(i % 4), double(i / 4)}, flat({}));
    const auto source = SourceDataset::fit_with(src, {1.0, 1.0, 1e-4});
    // Far from the source points mu' is identically 0.
    LabeledDataset target;
    target.add({100.0, 100.0}, 4.0);
    target.add({200.0, 100.0}, 6.0);
    const LssFit f = lss_fit(target, source);
    EXPECT_TRUE(f.degenerate);
    EXPECT_EQ(f.shift.scale, 1.0);
    EXPECT_NEAR(f.shift.location, 5.0, 1e-12);

    const auto t = lss_diff_gp_transform(target, source, {1.0, 1.0, 1e-4});
    EXPECT_EQ(t.status, TransferStatus::DegenerateDesign);
    EXPECT_EQ(t.shift.scale, 1.0);
}

TEST(LssDiffGp, RecoversAffineShiftEndToEnd) {
    const auto source = SourceDataset::fit_with(lattice(10, 1.0, surface), kSmooth);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> pos(0.0, 9.0);
    LabeledDataset target;
    for (int i = 0; i < 15; ++i) {
        const Position x{pos(rng), pos(rng)};
        target.add(x, 2.0 * surface(x) + 1.0);
    }
    const auto t = lss_diff_gp_transform(target, source, kSmooth);
    EXPECT_EQ(t.status, TransferStatus::Ok);
    EXPECT_NEAR(t.shift.scale, 2.0, 0.1);
    EXPECT_NEAR(t.shift.location, 1.0, 0.05);
}

TEST(LssDiffGp, ForcedIdentityReducesToDiffGpBitForBit) {
    const auto source = SourceDataset::fit_with(lattice(6, 1.0, surface), kSmooth);
    LabeledDataset target;
    target.add({1.5, 2.5}, 3.1);
    target.add({4.0, 0.5}, 1.2);
    target.add({2.0, 4.0}, 2.2);
    const auto a = diff_gp_transform(target, source, kSmooth);
    const auto b = transform_with_shift(target, source, kSmooth, {1.0, 0.0}, LssBase::Shifted);
    const auto c = transform_with_shift(target, source, kSmooth, {1.0, 0.0}, LssBase::Raw);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.source_variance, b.source_variance);
    EXPECT_EQ(a.values, c.values);
}

TEST(LssDiffGp, BaseSelectsShiftedOrRawSourceValues) {
    const auto source = SourceDataset::fit_with(lattice(5, 1.0, surface), kSmooth);
    const LocationScaleShift s{2.0, 1.0};
    const auto shifted = transform_with_shift(LabeledDataset{}, source, kSmooth, s, LssBase::Shifted);
    const auto raw = transform_with_shift(LabeledDataset{}, source, kSmooth, s, LssBase::Raw);
    for (std::size_t j = 0; j < source.size(); ++j) {
        EXPECT_EQ(shifted.values[j], 2.0 * source.data.values[j] + 1.0);
        EXPECT_EQ(raw.values[j], source.data.values[j]);
    }
}

TEST(Augment, ConcatenatesTargetFirst) {
    const auto source = SourceDataset::fit_with(lattice(4, 1.0, surface), kSmooth);
    LabeledDataset target;
    target.add({10.0, 10.0}, 1.0);
    target.add({11.0, 10.0}, 2.0);
    EXPECT_EQ(augment(target, TransformedDataset{}).values, target.values);
    const auto t = diff_gp_transform(target, source, kSmooth);
    const auto a = augment(target, t);
    ASSERT_EQ(a.size(), target.size() + source.size());
    EXPECT_EQ(a.points[0], target.points[0]);
    EXPECT_EQ(a.extra_noise[0], 0.0);
    EXPECT_EQ(a.extra_noise[2], t.source_variance[0]);
}

TEST(Augment, CoincidingPointsStillFactorize) {
    const auto source = SourceDataset::fit_with(lattice(4, 1.0, surface), {4.0, 3.0, 0.01});
    LabeledDataset target;
    target.add(source.data.points[5], source.data.values[5] + 0.3);
    const auto t = diff_gp_transform(target, source, {4.0, 3.0, 0.01});
    const auto a = augment(target, t);
    EXPECT_EQ(a.points[0], a.points[1 + 5]);
    EXPECT_NO_THROW(fit({4.0, 3.0, 0.01}, a));
}

TEST(Thin, KeepsEveryKth) {
    const auto d = lattice(4, 1.0, surface);
    const auto t = thin(d, 3);
    ASSERT_EQ(t.size(), 6u);
    EXPECT_EQ(t.points[1], d.points[3]);
    EXPECT_EQ(thin(d, 1).values, d.values);
    EXPECT_THROW(thin(d, 0), InvalidConfig);
}
