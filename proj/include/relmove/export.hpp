#pragma once

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "relmove/relatedness.hpp"

namespace relmove {

// CSV exports of the batch analytics. Distances and relatedness in meters,
// fixed 6 decimals; undefined values are empty cells.

namespace detail {
inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}
inline std::string fixed6(const std::optional<double>& v) { return v ? fixed6(*v) : std::string{}; }
}  // namespace detail

inline constexpr std::string_view kMatrixColumns = "animal_i,animal_j,mean_relatedness_m,coverage,intensity";
inline constexpr std::string_view kPairColumns = "slot,time,relatedness_m,provenance";
inline constexpr std::string_view kEpisodeColumns =
    "animal_i,animal_j,start_slot,end_slot,start_time,end_time,length_slots,mean_relatedness_m";
inline constexpr std::string_view kTravelColumns = "animal,start_slot,end_slot,path_length_m,displacement_m";

inline std::size_t export_matrix(std::ostream& out, const Dataset& data, TimeWindow window,
                                 const std::optional<std::vector<AnimalId>>& filter = std::nullopt) {
    const auto m = relatedness_matrix(data, window, filter);
    out << kMatrixColumns << '\n';
    for (const auto& e : m.entries) {
        out << e.relatedness.pair.first.str() << ',' << e.relatedness.pair.second.str() << ','
            << detail::fixed6(e.relatedness.mean) << ',' << detail::fixed6(e.relatedness.coverage) << ','
            << detail::fixed6(e.intensity) << '\n';
    }
    return m.entries.size();
}

inline std::size_t export_pair(std::ostream& out, const Dataset& data, const AnimalId& i, const AnimalId& j,
                               TimeWindow window) {
    const auto series = pairwise_series(data, i, j, window);
    out << kPairColumns << '\n';
    for (const auto& s : series.samples) {
        out << s.slot << ',' << format_iso(time_of(static_cast<std::int64_t>(s.slot), data.grid)) << ','
            << detail::fixed6(s.value) << ',' << to_string(s.provenance) << '\n';
    }
    return series.samples.size();
}

inline std::size_t export_episodes(std::ostream& out, const Dataset& data, const AnimalId& i, const AnimalId& j,
                                   const EpisodeParams& params, TimeWindow window) {
    const auto episodes = detect_stable_episodes(data, i, j, params, window);
    out << kEpisodeColumns << '\n';
    for (const auto& e : episodes) {
        out << e.pair.first.str() << ',' << e.pair.second.str() << ',' << e.start_slot << ',' << e.end_slot << ','
            << format_iso(time_of(static_cast<std::int64_t>(e.start_slot), data.grid)) << ','
            << format_iso(time_of(static_cast<std::int64_t>(e.end_slot), data.grid)) << ',' << e.length() << ','
            << detail::fixed6(e.mean_relatedness) << '\n';
    }
    return episodes.size();
}

/// One row per animal with at least one positioned slot in the window.
inline std::size_t export_travel(std::ostream& out, const Dataset& data, const std::vector<AnimalId>& animals,
                                 TimeWindow window) {
    out << kTravelColumns << '\n';
    std::size_t rows = 0;
    for (const auto& id : animals) {
        const auto& track = data.track(id);
        if (track.last_valid < window.start_slot || track.first_valid > window.end_slot) continue;
        const auto m = travel_metrics(data, id, window);
        out << id.str() << ',' << window.start_slot << ',' << window.end_slot << ',' << detail::fixed6(m.path_length)
            << ',' << detail::fixed6(m.displacement) << '\n';
        ++rows;
    }
    return rows;
}

}  // namespace relmove
