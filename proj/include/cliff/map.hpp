// Grid-indexed flow-field map: one circular-linear mixture plus a motion
// ratio per visited cell. Cell (cx, cy) covers the half-open square
// [cx*res, (cx+1)*res) x [cy*res, (cy+1)*res).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cliff/core.hpp"

namespace cliff {

struct CellIndex {
    std::int64_t cx = 0;
    std::int64_t cy = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
    friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

struct CellIndexHash {
    std::size_t operator()(const CellIndex& c) const {
        return static_cast<std::size_t>(
            mix_seed(static_cast<std::uint64_t>(c.cx),
                     static_cast<std::uint64_t>(c.cy)));
    }
};

inline CellIndex cell_of(double x, double y, double resolution) {
    return {static_cast<std::int64_t>(std::floor(x / resolution)),
            static_cast<std::int64_t>(std::floor(y / resolution))};
}

struct CliffCell {
    double x = 0.0;  // cell center
    double y = 0.0;
    Swgmm mixture;
    double motion_ratio = 0.0;   // in [0, 1]
    int observation_count = 0;   // velocities the fit consumed
};

struct MapBounds {
    double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;
};

class CliffMap {
public:
    explicit CliffMap(double resolution) : resolution_(resolution) {
        if (!(resolution > 0.0)) {
            throw std::invalid_argument("CliffMap: resolution must be > 0");
        }
    }

    double resolution() const { return resolution_; }
    std::size_t size() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }

    double center_x(const CellIndex& c) const {
        return (static_cast<double>(c.cx) + 0.5) * resolution_;
    }
    double center_y(const CellIndex& c) const {
        return (static_cast<double>(c.cy) + 0.5) * resolution_;
    }

    void insert(const CellIndex& idx, Swgmm mixture, double motion_ratio,
                int observation_count) {
        if (!(motion_ratio >= 0.0 && motion_ratio <= 1.0)) {
            throw std::invalid_argument("CliffMap: motion ratio outside [0, 1]");
        }
        CliffCell cell{center_x(idx), center_y(idx), std::move(mixture),
                       motion_ratio, observation_count};
        cells_.insert_or_assign(idx, std::move(cell));
    }

    const CliffCell* find(const CellIndex& idx) const {
        auto it = cells_.find(idx);
        return it == cells_.end() ? nullptr : &it->second;
    }

    /// Cells whose centers lie within `radius` of (x, y). Scans only the
    /// covering index window, so cost is O((2r/res)^2) hash probes.
    std::vector<std::pair<CellIndex, const CliffCell*>> query_radius(
        double x, double y, double radius) const {
        std::vector<std::pair<CellIndex, const CliffCell*>> out;
        if (!(radius >= 0.0) || cells_.empty()) return out;
        const auto lo = cell_of(x - radius, y - radius, resolution_);
        const auto hi = cell_of(x + radius, y + radius, resolution_);
        const double r2 = radius * radius;
        for (std::int64_t cx = lo.cx; cx <= hi.cx; ++cx) {
            for (std::int64_t cy = lo.cy; cy <= hi.cy; ++cy) {
                const CellIndex idx{cx, cy};
                auto it = cells_.find(idx);
                if (it == cells_.end()) continue;
                const double dx = it->second.x - x;
                const double dy = it->second.y - y;
                if (dx * dx + dy * dy <= r2) {
                    out.emplace_back(idx, &it->second);
                }
            }
        }
        return out;
    }

    /// Cell indices in deterministic (cx, cy) order.
    std::vector<CellIndex> sorted_indices() const {
        std::vector<CellIndex> out;
        out.reserve(cells_.size());
        for (const auto& [idx, _] : cells_) out.push_back(idx);
        std::sort(out.begin(), out.end());
        return out;
    }

    MapBounds bounds() const {
        if (cells_.empty()) return {};
        MapBounds b{1e300, 1e300, -1e300, -1e300};
        for (const auto& [idx, _] : cells_) {
            b.x_min = std::min(b.x_min, static_cast<double>(idx.cx) * resolution_);
            b.y_min = std::min(b.y_min, static_cast<double>(idx.cy) * resolution_);
            b.x_max = std::max(b.x_max, static_cast<double>(idx.cx + 1) * resolution_);
            b.y_max = std::max(b.y_max, static_cast<double>(idx.cy + 1) * resolution_);
        }
        return b;
    }

private:
    double resolution_;
    std::unordered_map<CellIndex, CliffCell, CellIndexHash> cells_;
};

}  // namespace cliff
