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

#ifndef LSEMAP_BASELINES_HPP
#define LSEMAP_BASELINES_HPP

#include <array>
#include <cstddef>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "lsemap/error.hpp"
#include "lsemap/grid.hpp"

namespace lsemap {

/// Uniform draw over the unmeasured indices. `measured` holds one flag per index.
template <class Rng>
std::size_t random_next(const GridDomain& domain, std::span<const char> measured, Rng& rng) {
    if (measured.size() != domain.size())
        throw InvalidConfig("measured flags do not match the grid size");
    std::size_t remaining = 0;
    for (char m : measured)
        remaining += m ? 0 : 1;
    if (remaining == 0)
        throw Exhausted("every grid point has been measured");
    std::uniform_int_distribution<std::size_t> pick(0, remaining - 1);
    std::size_t k = pick(rng);
    for (std::size_t i = 0; i < measured.size(); ++i) {
        if (measured[i])
            continue;
        if (k-- == 0)
            return i;
    }
    throw Exhausted("every grid point has been measured");
}

/// Axis-aligned block of lattice cells given by its inclusive corner rows and columns.
struct GridRect {
    std::size_t row0 = 0, col0 = 0, row1 = 0, col1 = 0;
};

/// Breadth-first recursive bisection of the grid. Emits the four domain
/// corners, then for each dequeued rectangle its center and the midpoints of
/// its four edges (row-major), then enqueues the four sub-rectangles.
class RectQueue {
public:
    explicit RectQueue(const GridDomain& domain) : domain_(domain), emitted_(domain.size(), 0) {
        const std::size_t r = domain.rows() - 1, c = domain.cols() - 1;
        for (auto [row, col] : std::array<GridCell, 4>{{{0, 0}, {0, c}, {r, 0}, {r, c}}})
            schedule(row, col);
        rects_.push_back({0, 0, r, c});
    }

    /// Next grid index in the sequence; throws Exhausted once all N were emitted.
    std::size_t next() {
        while (pending_.empty()) {
            if (rects_.empty()) {
                // Recursion covers every lattice point; this sweep only guards the invariant.
                for (std::size_t i = 0; i < emitted_.size(); ++i)
                    if (!emitted_[i]) {
                        emitted_[i] = 1;
                        ++count_;
                        return i;
                    }
                throw Exhausted("non-adaptive sequence has emitted every grid point");
            }
            expand(rects_.front());
            rects_.pop_front();
        }
        const std::size_t i = pending_.front();
        pending_.pop_front();
        return i;
    }

    std::size_t emitted() const { return count_ - pending_.size(); }

private:
    void schedule(std::size_t row, std::size_t col) {
        const std::size_t i = domain_.index(row, col);
        if (emitted_[i])
            return;
        emitted_[i] = 1;
        ++count_;
        pending_.push_back(i);
    }

    void expand(const GridRect& r) {
        const std::size_t rc = (r.row0 + r.row1) / 2, cc = (r.col0 + r.col1) / 2;
        schedule(rc, cc);
        schedule(r.row0, cc);
        schedule(rc, r.col0);
        schedule(rc, r.col1);
        schedule(r.row1, cc);
        const std::array<GridRect, 4> children{{{r.row0, r.col0, rc, cc},
                                                {r.row0, cc, rc, r.col1},
                                                {rc, r.col0, r.row1, cc},
                                                {rc, cc, r.row1, r.col1}}};
        for (const auto& child : children)
            if (child.row1 - child.row0 >= 2 || child.col1 - child.col0 >= 2)
                rects_.push_back(child);
    }

    GridDomain domain_;
    std::vector<char> emitted_;
    std::deque<std::size_t> pending_;
    std::deque<GridRect> rects_;
    std::size_t count_ = 0;
};

inline std::size_t nonadaptive_next(RectQueue& queue) { return queue.next(); }

/// The complete non-adaptive measurement order over the grid.
inline std::vector<std::size_t> nonadaptive_order(const GridDomain& domain) {
    RectQueue q(domain);
    std::vector<std::size_t> order;
    order.reserve(domain.size());
    for (std::size_t k = 0; k < domain.size(); ++k)
        order.push_back(q.next());
    return order;
}

}  // namespace lsemap

#endif  // LSEMAP_BASELINES_HPP
