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
#include <sstream>
#include <string>
#include <vector>

#include "lsemap/data.hpp"
#include "support.hpp"

using namespace lsemap;

namespace {

std::string lattice_csv(std::size_t cols, std::size_t rows, double spacing, bool shuffle = false) {
    std::vector<std::string> lines;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            lines.push_back(std::to_string(c * spacing) + "," + std::to_string(r * spacing) + "," +
                            std::to_string(0.5 * c + r));
    if (shuffle) {
        std::mt19937_64 rng(9);
        std::shuffle(lines.begin(), lines.end(), rng);
    }
    std::string s = "x_mm,y_mm,value\n";
    for (const auto& l : lines)
        s += l + "\n";
    return s;
}

GridMap parse(const std::string& text) {
    std::istringstream in(text);
    return parse_grid_csv(in, "mem.csv");
}

template <class E>
std::string message_of(const std::string& text) {
    try {
        parse(text);
    } catch (const E& e) {
        return e.what();
    }
    return "<no error>";
}

}  // namespace

TEST(GridCsv, TwoByTwo) {
    const GridMap m = parse("x_mm,y_mm,value\n0,0,1\n2,0,2\n0,2,3\n2,2,4\n");
    EXPECT_EQ(m.size(), 4u);
    EXPECT_EQ(m.domain.cols(), 2u);
    EXPECT_EQ(m.domain.spacing_x(), 2.0);
    EXPECT_EQ(m[m.domain.index(1, 0)], 3.0);
}

TEST(GridCsv, FullIngotLatticeSize) {
    const GridMap m = parse(lattice_csv(89, 74, 2.0, true));
    EXPECT_EQ(m.size(), 6586u);
    EXPECT_EQ(m.domain.cols(), 89u);
    EXPECT_EQ(m.domain.rows(), 74u);
}

TEST(GridCsv, MissingCellIsNamed) {
    const std::string msg = message_of<IncompleteLattice>("x_mm,y_mm,value\n0,0,1\n2,0,2\n0,2,3\n");
    EXPECT_NE(msg.find("x_mm=2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("y_mm=2"), std::string::npos) << msg;
}

TEST(GridCsv, NonUniformSpacing) {
    EXPECT_THROW(parse("x_mm,y_mm,value\n0,0,1\n1,0,1\n3,0,1\n"), NonUniformSpacing);
}

TEST(GridCsv, ParseErrorsCarryLocation) {
    EXPECT_NE(message_of<ParseError>("x_mm,y_mm,value\n0,0,1\n1,zero,2\n").find("mem.csv:3"), std::string::npos);
    EXPECT_NE(message_of<ParseError>("x,y,v\n").find("mem.csv:1"), std::string::npos);
    EXPECT_NE(message_of<ParseError>("x_mm,y_mm,value\n0,0,1\n0,0,2\n").find("duplicate"), std::string::npos);
    EXPECT_THROW(parse(""), ParseError);
    EXPECT_THROW(parse("x_mm,y_mm,value\n"), ParseError);
    EXPECT_THROW(parse("x_mm,y_mm,value\n0,0,1,4\n"), ParseError);
}

TEST(GridCsv, RoundTripIsExact) {
    const auto g = GridDomain({-3.25, 7.5}, 0.7, 1.3, 6, 4);
    SynthParams p;
    const GridMap m = synth_map(SynthKind::GpDraw, g, p, 5);
    std::ostringstream out;
    write_grid_csv(out, m);
    const GridMap back = parse(out.str());
    EXPECT_EQ(back.values, m.values);
    EXPECT_EQ(back.domain.cols(), g.cols());
    EXPECT_EQ(back.domain.origin(), g.origin());
    for (std::size_t i = 0; i < g.size(); ++i)
        EXPECT_NEAR(back.domain.point_at(i).x, g.point_at(i).x, 1e-12);
}

TEST(GridCsv, RowOrderDoesNotMatter) {
    EXPECT_EQ(parse(lattice_csv(7, 5, 2.0, false)).values, parse(lattice_csv(7, 5, 2.0, true)).values);
}

TEST(GridCsv, FileRoundTrip) {
    const auto dir = lsemap::testing::scratch_dir("gridcsv");
    const GridMap m = synth_map(SynthKind::SinusoidRidge, GridDomain::square(9, 5, 2.0), {}, 3);
    write_grid_csv((dir / "m.csv").string(), m);
    EXPECT_EQ(load_grid_csv((dir / "m.csv").string()).values, m.values);
    EXPECT_THROW(load_grid_csv((dir / "absent.csv").string()), ParseError);
}

TEST(Truth, ThresholdBoundaryCountsAsPositive) {
    const GridMap m{GridDomain::square(3, 1, 1.0), {1.9, 2.0, 2.1}};
    EXPECT_EQ(m.truth(2.0), (std::vector<char>{0, 1, 1}));
}

TEST(EdgeBand, ZeroBandIsConstantHigh) {
    SynthParams p;
    p.band_mm = 0.0;
    const GridMap m = synth_map(SynthKind::EdgeBand, GridDomain::square(10, 10, 2.0), p, 0);
    for (double v : m.values)
        EXPECT_EQ(v, p.high);
}

TEST(EdgeBand, SubLevelSetIsExactlyTheFrame) {
    const auto g = GridDomain::square(40, 40, 2.0);
    const GridMap m = synth_map(SynthKind::EdgeBand, g, {}, 0);
    const auto truth = m.truth(2.0);
    // Points strictly within 10 mm of the boundary: lattice offsets 0..4 on a 2 mm grid.
    std::size_t frame = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const GridCell c = g.cell(i);
        const std::size_t d = std::min({c.col, 39 - c.col, c.row, 39 - c.row});
        const bool in_frame = d * 2 < 10;
        frame += in_frame;
        EXPECT_EQ(truth[i], in_frame ? 0 : 1) << i;
    }
    // 1600 minus the 30x30 interior.
    EXPECT_EQ(frame, 700u);
    EXPECT_EQ(std::count(truth.begin(), truth.end(), 0), 700);
}

TEST(EdgeBand, SharpVariantAndRampRange) {
    SynthParams sharp;
    sharp.ramp_mm = 0.0;
    const GridMap s = synth_map(SynthKind::EdgeBand, GridDomain::square(40, 40, 2.0), sharp, 0);
    for (double v : s.values)
        EXPECT_TRUE(v == 1.0 || v == 5.0);
    const GridMap r = synth_map(SynthKind::EdgeBand, GridDomain::square(40, 40, 2.0), {}, 0);
    EXPECT_EQ(r.min_value(), 1.0);
    EXPECT_EQ(r.max_value(), 5.0);
    EXPECT_EQ(s.truth(2.0), r.truth(2.0));
}

TEST(Synth, DeterministicPerSeedAndScaled) {
    const auto g = GridDomain::square(20, 15, 2.0);
    for (SynthKind k : {SynthKind::SinusoidRidge, SynthKind::GpDraw, SynthKind::EdgeBand}) {
        EXPECT_EQ(synth_map(k, g, {}, 4), synth_map(k, g, {}, 4));
        SynthParams p;
        p.scale = 2.0;
        p.offset = 1.0;
        const GridMap a = synth_map(k, g, {}, 4), b = synth_map(k, g, p, 4);
        for (std::size_t i = 0; i < g.size(); ++i)
            EXPECT_DOUBLE_EQ(b.values[i], 2.0 * a.values[i] + 1.0);
    }
    EXPECT_NE(synth_map(SynthKind::GpDraw, g, {}, 1).values, synth_map(SynthKind::GpDraw, g, {}, 2).values);
    EXPECT_EQ(parse_synth_kind(synth_kind_name(SynthKind::GpDraw)), SynthKind::GpDraw);
    EXPECT_THROW(parse_synth_kind("spiral"), InvalidConfig);
    SynthParams bad;
    bad.length_mm = 0.0;
    EXPECT_THROW(synth_map(SynthKind::GpDraw, g, bad, 0), InvalidConfig);
}

TEST(Synth, RidgeStaysWithinAmplitude) {
    const GridMap m = synth_map(SynthKind::SinusoidRidge, GridDomain::square(30, 30, 2.0), {}, 8);
    EXPECT_GE(m.min_value(), 1.0 - 1e-12);
    EXPECT_LE(m.max_value(), 5.0 + 1e-12);
}

TEST(Oracle, NoiselessIsExact) {
    const GridMap m = synth_map(SynthKind::GpDraw, GridDomain::square(5, 5, 1.0), {}, 1);
    NoisyOracle o(m, 0.0, 3);
    for (std::size_t i = 0; i < m.size(); ++i)
        EXPECT_EQ(oracle_query(o, i), m.values[i]);
    EXPECT_THROW(o.query(25), OffGridIndex);
    EXPECT_THROW(NoisyOracle(m, -1.0, 0), InvalidConfig);
}

TEST(Oracle, SampleMeanConcentrates) {
    const GridMap m{GridDomain::square(2, 1, 1.0), {3.0, 4.0}};
    NoisyOracle o(m, 0.5, 17);
    double s = 0.0;
    for (int k = 0; k < 10000; ++k)
        s += o.query(1);
    EXPECT_LE(std::fabs(s / 10000 - 4.0), 4 * 0.5 / 100);
}

TEST(Oracle, SameSeedSameStream) {
    const GridMap m{GridDomain::square(2, 1, 1.0), {3.0, 4.0}};
    NoisyOracle a(m, 0.5, 17), b(m, 0.5, 17), c(m, 0.5, 18);
    bool differs = false;
    for (int k = 0; k < 100; ++k) {
        const double x = a.query(k % 2);
        EXPECT_EQ(x, b.query(k % 2));
        differs |= x != c.query(k % 2);
    }
    EXPECT_TRUE(differs);
}
