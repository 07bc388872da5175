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

#ifndef LSEMAP_GRID_HPP
#define LSEMAP_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "lsemap/error.hpp"

namespace lsemap {

/// A point on the measured surface, in millimeters.
struct Position {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Position&, const Position&) = default;
};

inline double squared_distance(const Position& a, const Position& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

struct GridCell {
    std::size_t row = 0;
    std::size_t col = 0;

    friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Rectangular lattice of candidate measurement positions.
///
/// Points are indexed row-major: index = row * cols + col, where columns run
/// along x and rows along y.
class GridDomain {
public:
    GridDomain() = default;

    GridDomain(Position origin, double spacing_x, double spacing_y, std::size_t cols, std::size_t rows)
        : origin_(origin), spacing_x_(spacing_x), spacing_y_(spacing_y), cols_(cols), rows_(rows) {
        if (cols == 0 || rows == 0)
            throw InvalidConfig("grid must contain at least one point");
        if (!(spacing_x > 0.0) || !(spacing_y > 0.0) || !std::isfinite(spacing_x) || !std::isfinite(spacing_y))
            throw InvalidConfig("grid spacing must be positive and finite");
        if (!std::isfinite(origin.x) || !std::isfinite(origin.y))
            throw InvalidConfig("grid origin must be finite");
    }

    /// Square lattice with equal spacing along both axes.
    static GridDomain square(std::size_t cols, std::size_t rows, double spacing, Position origin = {}) {
        return GridDomain(origin, spacing, spacing, cols, rows);
    }

    std::size_t size() const { return cols_ * rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t rows() const { return rows_; }
    Position origin() const { return origin_; }
    double spacing_x() const { return spacing_x_; }
    double spacing_y() const { return spacing_y_; }

    bool contains(std::size_t index) const { return index < size(); }

    GridCell cell(std::size_t index) const {
        check(index);
        return {index / cols_, index % cols_};
    }

    std::size_t index(std::size_t row, std::size_t col) const {
        if (row >= rows_ || col >= cols_)
            throw OffGridIndex("cell (" + std::to_string(row) + ", " + std::to_string(col) + ") is outside the grid");
        return row * cols_ + col;
    }

    Position point_at(std::size_t index) const {
        const GridCell c = cell(index);
        return {origin_.x + static_cast<double>(c.col) * spacing_x_,
                origin_.y + static_cast<double>(c.row) * spacing_y_};
    }

    double width() const { return static_cast<double>(cols_ - 1) * spacing_x_; }
    double height() const { return static_cast<double>(rows_ - 1) * spacing_y_; }

    /// Length of the bounding-box diagonal; falls back to the larger spacing
    /// for a single-point grid so that length scales stay positive.
    double diagonal() const {
        const double d = std::hypot(width(), height());
        return d > 0.0 ? d : std::max(spacing_x_, spacing_y_);
    }

    /// Index nearest the geometric center, rounding toward the lower index.
    std::size_t center_index() const { return index((rows_ - 1) / 2, (cols_ - 1) / 2); }

    bool within_bounds(const Position& p, double tol = 1e-9) const {
        const double sx = tol * std::max(1.0, spacing_x_);
        const double sy = tol * std::max(1.0, spacing_y_);
        return p.x >= origin_.x - sx && p.x <= origin_.x + width() + sx && p.y >= origin_.y - sy &&
               p.y <= origin_.y + height() + sy;
    }

    friend bool operator==(const GridDomain&, const GridDomain&) = default;

private:
    void check(std::size_t index) const {
        if (index >= size())
            throw OffGridIndex("grid index " + std::to_string(index) + " is outside [0, " + std::to_string(size()) +
                               ")");
    }

    Position origin_{};
    double spacing_x_ = 1.0;
    double spacing_y_ = 1.0;
    std::size_t cols_ = 1;
    std::size_t rows_ = 1;
};

}  // namespace lsemap

#endif  // LSEMAP_GRID_HPP
