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

#ifndef LSEMAP_DATA_HPP
#define LSEMAP_DATA_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lsemap/error.hpp"
#include "lsemap/grid.hpp"

namespace lsemap {

/// A fully measured surface: one finite value per grid index.
struct GridMap {
    GridDomain domain;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values.at(i); }

    double min_value() const { return *std::min_element(values.begin(), values.end()); }
    double max_value() const { return *std::max_element(values.begin(), values.end()); }
    double range() const { return max_value() - min_value(); }

    /// Ground-truth labels: true where the value is at or above the threshold.
    std::vector<char> truth(double threshold) const {
        std::vector<char> t(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            t[i] = values[i] >= threshold ? 1 : 0;
        return t;
    }

    void validate() const {
        if (values.size() != domain.size())
            throw InvalidConfig("map has " + std::to_string(values.size()) + " values for " +
                                std::to_string(domain.size()) + " grid points");
        for (double v : values)
            if (!std::isfinite(v))
                throw ValueNotFinite("map contains a non-finite value");
    }

    friend bool operator==(const GridMap&, const GridMap&) = default;
};

inline constexpr std::string_view kGridCsvHeader = "x_mm,y_mm,value";

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view text, double& out) {
    const std::string s(trim(text));
    if (s.empty())
        return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Sorted distinct coordinates, merging values closer than a relative tolerance.
inline std::vector<double> distinct(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double span = v.empty() ? 0.0 : v.back() - v.front();
    const double tol = 1e-9 * std::max(1.0, span);
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || x - out.back() > tol)
            out.push_back(x);
    return out;
}

inline double lattice_spacing(const std::vector<double>& coords, const char* axis, const std::string& where) {
    if (coords.size() < 2)
        return 0.0;
    const double s = (coords.back() - coords.front()) / static_cast<double>(coords.size() - 1);
    for (std::size_t k = 0; k + 1 < coords.size(); ++k) {
        const double d = coords[k + 1] - coords[k];
        if (std::abs(d - s) > 1e-6 * s)
            throw NonUniformSpacing(where + ": spacing along " + axis + " varies (" + format_double(d) + " vs " +
                                    format_double(s) + " mm near " + format_double(coords[k]) + ")");
    }
    return s;
}

}  // namespace detail

/// Parses a `x_mm,y_mm,value` CSV whose rows form a complete rectangular
/// lattice, in any row order.
inline GridMap parse_grid_csv(std::istream& in, const std::string& where = "<stream>") {
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    struct Row {
        double x, y, v;
        std::size_t line;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty())
            continue;
        if (!header_seen) {
            std::string compact;
            for (char ch : t)
                if (ch != ' ' && ch != '\t')
                    compact.push_back(ch);
            if (compact != kGridCsvHeader)
                throw ParseError(where + ":" + std::to_string(line_no) + ": expected header '" +
                                 std::string(kGridCsvHeader) + "'");
            header_seen = true;
            continue;
        }
        Row r{0, 0, 0, line_no};
        const auto c1 = t.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : t.find(',', c1 + 1);
        if (c2 == std::string_view::npos || t.find(',', c2 + 1) != std::string_view::npos ||
            !detail::parse_double(t.substr(0, c1), r.x) || !detail::parse_double(t.substr(c1 + 1, c2 - c1 - 1), r.y) ||
            !detail::parse_double(t.substr(c2 + 1), r.v))
            throw ParseError(where + ":" + std::to_string(line_no) + ": expected three finite numbers");
        rows.push_back(r);
    }
    if (!header_seen)
        throw ParseError(where + ": empty file");
    if (rows.empty())
        throw ParseError(where + ": no data rows");

    std::vector<double> xs, ys;
    for (const auto& r : rows) {
        xs.push_back(r.x);
        ys.push_back(r.y);
    }
    xs = detail::distinct(std::move(xs));
    ys = detail::distinct(std::move(ys));
    double sx = detail::lattice_spacing(xs, "x", where);
    double sy = detail::lattice_spacing(ys, "y", where);
    if (sx == 0.0)
        sx = sy == 0.0 ? 1.0 : sy;
    if (sy == 0.0)
        sy = sx;

    GridDomain domain({xs.front(), ys.front()}, sx, sy, xs.size(), ys.size());
    std::vector<double> values(domain.size(), 0.0);
    std::vector<char> seen(domain.size(), 0);
    for (const auto& r : rows) {
        const double fc = (r.x - xs.front()) / sx;
        const double fr = (r.y - ys.front()) / sy;
        const auto col = static_cast<std::size_t>(std::llround(fc));
        const auto row = static_cast<std::size_t>(std::llround(fr));
        if (std::abs(fc - static_cast<double>(col)) > 1e-6 || std::abs(fr - static_cast<double>(row)) > 1e-6)
            throw NonUniformSpacing(where + ":" + std::to_string(r.line) + ": point (" + detail::format_double(r.x) +
                                    ", " + detail::format_double(r.y) + ") is off the inferred lattice");
        const std::size_t i = domain.index(row, col);
        if (seen[i])
            throw ParseError(where + ":" + std::to_string(r.line) + ": duplicate grid cell (" +
                             detail::format_double(r.x) + ", " + detail::format_double(r.y) + ")");
        seen[i] = 1;
        values[i] = r.v;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) {
            const Position p = domain.point_at(i);
            throw IncompleteLattice(where + ": missing grid cell at x_mm=" + detail::format_double(p.x) +
                                    ", y_mm=" + detail::format_double(p.y));
        }
    return {domain, std::move(values)};
}

inline GridMap load_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(path + ": cannot open file");
    return parse_grid_csv(in, path);
}

/// Row-major (y outer, x inner) with full double precision.
inline void write_grid_csv(std::ostream& out, const GridMap& map) {
    out << kGridCsvHeader << '\n';
    for (std::size_t i = 0; i < map.size(); ++i) {
        const Position p = map.domain.point_at(i);
        out << detail::format_double(p.x) << ',' << detail::format_double(p.y) << ','
            << detail::format_double(map.values[i]) << '\n';
    }
}

inline void write_grid_csv(const std::string& path, const GridMap& map) {
    std::ofstream out(path);
    if (!out)
        throw InvalidConfig(path + ": cannot open for writing");
    write_grid_csv(out, map);
}

enum class SynthKind { SinusoidRidge, GpDraw, EdgeBand };

inline SynthKind parse_synth_kind(std::string_view s) {
    if (s == "sinusoid_ridge")
        return SynthKind::SinusoidRidge;
    if (s == "gp_draw")
        return SynthKind::GpDraw;
    if (s == "edge_band")
        return SynthKind::EdgeBand;
    throw InvalidConfig("unknown synthetic map kind '" + std::string(s) + "'");
}

inline const char* synth_kind_name(SynthKind k) {
    switch (k) {
    case SynthKind::SinusoidRidge: return "sinusoid_ridge";
    case SynthKind::GpDraw: return "gp_draw";
    default: return "edge_band";
    }
}

/// Parameters of the synthetic surrogate surfaces. The final map is
/// `scale * base + offset`.
struct SynthParams {
    // edge_band: `low` within band_mm of the lattice boundary, `high` inside,
    // joined by a smoothstep of width ramp_mm centred on the band edge.
    double high = 5.0;
    double low = 1.0;
    double band_mm = 10.0;
    double ramp_mm = 8.0;
    // sinusoid_ridge and gp_draw: level + amplitude * shape, shape in about [-1, 1].
    double level = 3.0;
    double amplitude = 2.0;
    /// Ridge wavelength, or the GP length scale.
    double length_mm = 40.0;
    std::size_t features = 512;
    double scale = 1.0;
    double offset = 0.0;

    void validate(SynthKind kind) const {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(high) || !finite(low) || !finite(level) || !finite(amplitude) || !finite(scale) || !finite(offset))
            throw InvalidConfig("synthetic map parameters must be finite");
        if (kind == SynthKind::EdgeBand && (!(band_mm >= 0.0) || !(ramp_mm >= 0.0) || !finite(band_mm) ||
                                            !finite(ramp_mm)))
            throw InvalidConfig("edge_band width and ramp must be finite and non-negative");
        if (kind != SynthKind::EdgeBand && !(length_mm > 0.0))
            throw InvalidConfig("length_mm must be positive");
        if (kind == SynthKind::GpDraw && features == 0)
            throw InvalidConfig("gp_draw needs at least one feature");
    }
};

/// Deterministic synthetic surface. gp_draw is an approximate sample from a
/// zero-mean RBF GP (variance amplitude^2, length scale length_mm) built from
/// random Fourier features, which keeps large lattices cheap.
inline GridMap synth_map(SynthKind kind, const GridDomain& domain, const SynthParams& p, std::uint64_t seed) {
    p.validate(kind);
    std::vector<double> values(domain.size());
    switch (kind) {
    case SynthKind::EdgeBand:
        for (std::size_t i = 0; i < domain.size(); ++i) {
            const GridCell c = domain.cell(i);
            const double dx = static_cast<double>(std::min(c.col, domain.cols() - 1 - c.col)) * domain.spacing_x();
            const double dy = static_cast<double>(std::min(c.row, domain.rows() - 1 - c.row)) * domain.spacing_y();
            const double d = std::min(dx, dy);
            if (p.band_mm == 0.0) {
                values[i] = p.high;
            } else if (p.ramp_mm == 0.0) {
                values[i] = d < p.band_mm ? p.low : p.high;
            } else {
                const double t = std::clamp((d - p.band_mm) / p.ramp_mm + 0.5, 0.0, 1.0);
                values[i] = p.low + (p.high - p.low) * t * t * (3.0 - 2.0 * t);
            }
        }
        break;
    case SynthKind::SinusoidRidge: {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
        const double dir = angle(rng);
        const double phase = angle(rng);
        const double k = 2.0 * std::numbers::pi / p.length_mm;
        for (std::size_t i = 0; i < domain.size(); ++i) {
            const Position x = domain.point_at(i);
            values[i] = p.level + p.amplitude * std::sin(k * (x.x * std::cos(dir) + x.y * std::sin(dir)) + phase);
        }
        break;
    }
    case SynthKind::GpDraw: {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> freq(0.0, 1.0 / p.length_mm);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        std::vector<double> wx(p.features), wy(p.features), b(p.features);
        for (std::size_t f = 0; f < p.features; ++f) {
            wx[f] = freq(rng);
            wy[f] = freq(rng);
            b[f] = phase(rng);
        }
        const double norm = std::sqrt(2.0 / static_cast<double>(p.features));
        for (std::size_t i = 0; i < domain.size(); ++i) {
            const Position x = domain.point_at(i);
            double s = 0.0;
            for (std::size_t f = 0; f < p.features; ++f)
                s += std::cos(wx[f] * x.x + wy[f] * x.y + b[f]);
            values[i] = p.level + p.amplitude * norm * s;
        }
        break;
    }
    }
    for (double& v : values)
        v = p.scale * v + p.offset;
    return {domain, std::move(values)};
}

/// Pre-measured map plus additive Gaussian measurement noise from a seeded stream.
class NoisyOracle {
public:
    NoisyOracle(GridMap map, double noise_sd, std::uint64_t seed) : map_(std::move(map)), noise_sd_(noise_sd), rng_(seed) {
        map_.validate();
        if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
            throw InvalidConfig("noise sd must be finite and non-negative");
    }

    double query(std::size_t index) {
        if (index >= map_.size())
            throw OffGridIndex("grid index " + std::to_string(index) + " is outside the oracle map");
        if (noise_sd_ == 0.0)
            return map_.values[index];
        return map_.values[index] + noise_sd_ * unit_(rng_);
    }

    const GridMap& map() const { return map_; }
    double noise_sd() const { return noise_sd_; }

private:
    GridMap map_;
    double noise_sd_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> unit_{0.0, 1.0};
};

inline double oracle_query(NoisyOracle& oracle, std::size_t index) { return oracle.query(index); }

}  // namespace lsemap

#endif  // LSEMAP_DATA_HPP
