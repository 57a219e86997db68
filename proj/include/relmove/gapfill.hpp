#pragma once

#include <algorithm>
#include <vector>

#include "relmove/core.hpp"

namespace relmove {

/// An interior run of interpolated slots. The flanks are the Measured slots
/// on either side: start_slot = left_flank + 1, end_slot = right_flank - 1.
struct GapRecord {
    AnimalId animal;
    std::size_t start_slot = 0;
    std::size_t end_slot = 0;
    std::size_t left_flank = 0;
    std::size_t right_flank = 0;

    std::size_t length() const { return end_slot - start_slot + 1; }

    friend bool operator==(const GapRecord&, const GapRecord&) = default;
};

/// Slot-distance from `slot` to the nearer reliable flank. The first
/// interpolated slot of a run is 1, so 0 stays reserved for measured data.
inline int uncertainty_degree(const GapRecord& gap, std::size_t slot) {
    if (slot < gap.start_slot || slot > gap.end_slot) {
        throw Error("outside_gap", "slot " + std::to_string(slot) + " is not inside the gap [" +
                                       std::to_string(gap.start_slot) + ", " +
                                       std::to_string(gap.end_slot) + "]");
    }
    return static_cast<int>(std::min(slot - gap.left_flank, gap.right_flank - slot));
}

struct GapFillResult {
    TrackSeries track;
    std::vector<GapRecord> gaps;
};

/// Linear interpolation (by slot index) across every interior run of
/// Unavailable slots. Slots outside [first_valid, last_valid] are untouched.
inline GapFillResult interpolate_gaps(TrackSeries raw) {
    GapFillResult out;
    auto& slots = raw.slots;
    std::optional<std::size_t> left;
    for (std::size_t t = 0; t < slots.size(); ++t) {
        if (slots[t].tag != SlotTag::Measured) continue;
        if (left && t > *left + 1) {
            GapRecord gap{raw.animal, *left + 1, t - 1, *left, t};
            const PlanarPoint a = *slots[*left].position;
            const PlanarPoint b = *slots[t].position;
            const double span = static_cast<double>(t - *left);
            for (std::size_t k = gap.start_slot; k <= gap.end_slot; ++k) {
                const double s = static_cast<double>(k - *left) / span;
                slots[k] = SlotState::interpolated(lerp(a, b, s), uncertainty_degree(gap, k));
            }
            out.gaps.push_back(std::move(gap));
        }
        left = t;
    }
    out.track = std::move(raw);
    return out;
}

struct AvailabilityCell {
    SlotTag state = SlotTag::Measured;
    int max_uncertainty = 0;
};

struct AvailabilityRow {
    AnimalId animal;
    std::vector<AvailabilityCell> cells;
};

namespace detail {
inline int severity(SlotTag t) {
    switch (t) {
    case SlotTag::Measured: return 0;
    case SlotTag::Interpolated: return 1;
    case SlotTag::Unavailable: return 2;
    }
    return 2;
}
}  // namespace detail

/// Bucket b covers slots [floor(b*N/B), floor((b+1)*N/B)). More buckets than
/// slots are clamped to one bucket per slot.
inline std::vector<std::pair<std::size_t, std::size_t>> bucket_ranges(std::size_t slot_count,
                                                                      std::size_t buckets) {
    if (buckets < 1) throw Error("invalid_buckets", "bucket count must be at least 1");
    buckets = std::min(buckets, slot_count);
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    ranges.reserve(buckets);
    for (std::size_t b = 0; b < buckets; ++b) {
        ranges.emplace_back(b * slot_count / buckets, (b + 1) * slot_count / buckets);
    }
    return ranges;
}

inline std::vector<AvailabilityRow> availability_heatmap(const Dataset& data, std::size_t buckets) {
    const auto ranges = bucket_ranges(data.grid.slot_count, buckets);
    std::vector<AvailabilityRow> rows;
    rows.reserve(data.tracks.size());
    for (const auto& [id, track] : data.tracks) {
        AvailabilityRow row{id, {}};
        row.cells.reserve(ranges.size());
        for (auto [lo, hi] : ranges) {
            AvailabilityCell cell;
            for (std::size_t t = lo; t < hi; ++t) {
                const auto& s = track.slots[t];
                if (detail::severity(s.tag) > detail::severity(cell.state)) cell.state = s.tag;
                cell.max_uncertainty = std::max(cell.max_uncertainty, s.uncertainty);
            }
            row.cells.push_back(cell);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Display radius for an entity whose position is `uncertainty` slots away
/// from a fix: grows linearly and saturates at `cap`.
inline double spatial_uncertainty_radius(int uncertainty, double base_radius, double growth,
                                         double cap) {
    if (uncertainty < 0 || base_radius < 0.0 || growth < 0.0 || cap < 0.0) {
        throw Error("invalid_radius_parameters", "radius parameters must be non-negative");
    }
    return std::min(base_radius + growth * uncertainty, cap);
}

}  // namespace relmove
