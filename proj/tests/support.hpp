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

#ifndef LSEMAP_TESTS_SUPPORT_HPP
#define LSEMAP_TESTS_SUPPORT_HPP

// Independent reference computations for the tests. Nothing here calls into
// the library's numerical code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "lsemap/gp.hpp"
#include "lsemap/grid.hpp"

namespace lsemap::testing {

using Matrix = std::vector<std::vector<long double>>;

/// Gauss-Jordan inverse with partial pivoting in long double.
inline Matrix invert(Matrix a) {
    const std::size_t n = a.size();
    Matrix inv(n, std::vector<long double>(n, 0.0L));
    for (std::size_t i = 0; i < n; ++i)
        inv[i][i] = 1.0L;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[p][c]))
                p = r;
        std::swap(a[c], a[p]);
        std::swap(inv[c], inv[p]);
        const long double d = a[c][c];
        for (std::size_t k = 0; k < n; ++k) {
            a[c][k] /= d;
            inv[c][k] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || a[r][c] == 0.0L)
                continue;
            const long double f = a[r][c];
            for (std::size_t k = 0; k < n; ++k) {
                a[r][k] -= f * a[c][k];
                inv[r][k] -= f * inv[c][k];
            }
        }
    }
    return inv;
}

inline long double rbf(const KernelParams& p, const Position& a, const Position& b) {
    const long double dx = static_cast<long double>(a.x) - b.x;
    const long double dy = static_cast<long double>(a.y) - b.y;
    return p.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0L * p.length_scale * p.length_scale));
}

/// Posterior by explicit inverse of K + diag(noise + extra + jitter).
struct DenseGp {
    KernelParams params;
    std::vector<Position> points;
    Matrix inv;
    std::vector<long double> alpha;
    std::vector<long double> prior;

    DenseGp(const KernelParams& p, const LabeledDataset& d, double jitter, const std::vector<double>& prior_mean = {})
        : params(p), points(d.points) {
        const std::size_t n = d.size();
        Matrix k(n, std::vector<long double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                k[i][j] = rbf(p, d.points[i], d.points[j]);
        for (std::size_t i = 0; i < n; ++i)
            k[i][i] += static_cast<long double>(p.noise_variance) + d.extra_noise_at(i) + jitter;
        inv = invert(k);
        prior.assign(n, 0.0L);
        for (std::size_t i = 0; i < prior_mean.size(); ++i)
            prior[i] = prior_mean[i];
        alpha.assign(n, 0.0L);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                alpha[i] += inv[i][j] * (d.values[j] - prior[j]);
    }

    long double mean(const Position& x) const {
        long double m = 0.0L;
        for (std::size_t i = 0; i < points.size(); ++i)
            m += rbf(params, x, points[i]) * alpha[i];
        return m;
    }

    long double variance(const Position& x) const {
        const std::size_t n = points.size();
        std::vector<long double> kx(n);
        for (std::size_t i = 0; i < n; ++i)
            kx[i] = rbf(params, x, points[i]);
        long double q = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            long double row = 0.0L;
            for (std::size_t j = 0; j < n; ++j)
                row += inv[i][j] * kx[j];
            q += kx[i] * row;
        }
        return std::clamp<long double>(params.amplitude - q, 0.0L, params.amplitude);
    }
};

/// |a - b| / max(|b|, floor).
inline double rel_err(double a, double b, double floor) { return std::fabs(a - b) / std::max(std::fabs(b), floor); }

inline LabeledDataset random_dataset(std::mt19937_64& rng, std::size_t n, double extent) {
    std::uniform_real_distribution<double> pos(0.0, extent), val(-3.0, 3.0);
    LabeledDataset d;
    for (std::size_t i = 0; i < n; ++i)
        d.add({pos(rng), pos(rng)}, val(rng));
    return d;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("lsemap_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace lsemap::testing

#endif  // LSEMAP_TESTS_SUPPORT_HPP
