#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "relmove/core.hpp"

namespace relmove {

enum class Provenance { BothMeasured, SomeInterpolated, Undefined };

inline std::string_view to_string(Provenance p) {
    switch (p) {
    case Provenance::BothMeasured: return "both_measured";
    case Provenance::SomeInterpolated: return "some_interpolated";
    case Provenance::Undefined: return "undefined";
    }
    return "undefined";
}

struct RelatednessSample {
    std::size_t slot = 0;
    std::optional<double> value;  // P = M - d, meters
    Provenance provenance = Provenance::Undefined;
};

using AnimalPair = std::pair<AnimalId, AnimalId>;

inline AnimalPair canonical_pair(const AnimalId& a, const AnimalId& b) {
    return a < b ? AnimalPair{a, b} : AnimalPair{b, a};
}

struct RelatednessSeries {
    AnimalPair pair;
    TimeWindow window;
    std::vector<RelatednessSample> samples;
};

struct WindowedRelatedness {
    AnimalPair pair;
    TimeWindow window;
    std::optional<double> mean;
    double coverage = 0.0;
};

namespace detail {

struct PairTracks {
    const TrackSeries* a;
    const TrackSeries* b;
};

inline PairTracks resolve_pair(const Dataset& data, const AnimalId& i, const AnimalId& j) {
    const auto& a = data.track(i);
    const auto& b = data.track(j);
    if (i == j) throw Error("self_pair", "relatedness needs two distinct animals, got '" + i.str() + "' twice");
    return {&a, &b};
}

inline RelatednessSample sample_at(const TrackSeries& a, const TrackSeries& b, double M, std::size_t t) {
    const auto& sa = a.slots[t];
    const auto& sb = b.slots[t];
    if (!sa.positioned() || !sb.positioned()) return {t, std::nullopt, Provenance::Undefined};
    const double d = distance(*sa.position, *sb.position);
    const auto prov = (sa.tag == SlotTag::Measured && sb.tag == SlotTag::Measured)
                          ? Provenance::BothMeasured
                          : Provenance::SomeInterpolated;
    return {t, std::clamp(M - d, 0.0, M), prov};
}

}  // namespace detail

/// Euclidean distance d_ij at slot t; none when either animal is Unavailable.
inline std::optional<double> proximity(const Dataset& data, const AnimalId& i, const AnimalId& j,
                                       std::int64_t t) {
    auto [a, b] = detail::resolve_pair(data, i, j);
    data.check_slot(t);
    const auto& sa = a->slots[static_cast<std::size_t>(t)];
    const auto& sb = b->slots[static_cast<std::size_t>(t)];
    if (!sa.positioned() || !sb.positioned()) return std::nullopt;
    return distance(*sa.position, *sb.position);
}

/// P_ij(t) = M - d_ij(t).
inline RelatednessSample pairwise_relatedness(const Dataset& data, const AnimalId& i,
                                              const AnimalId& j, std::int64_t t) {
    auto [a, b] = detail::resolve_pair(data, i, j);
    data.check_slot(t);
    return detail::sample_at(*a, *b, data.arena.M, static_cast<std::size_t>(t));
}

inline RelatednessSeries pairwise_series(const Dataset& data, const AnimalId& i, const AnimalId& j,
                                         TimeWindow window) {
    auto [a, b] = detail::resolve_pair(data, i, j);
    TimeWindow::checked(static_cast<std::int64_t>(window.start_slot),
                        static_cast<std::int64_t>(window.end_slot), data.grid);
    RelatednessSeries out{canonical_pair(i, j), window, {}};
    out.samples.reserve(window.length());
    for (std::size_t t = window.start_slot; t <= window.end_slot; ++t) {
        out.samples.push_back(detail::sample_at(*a, *b, data.arena.M, t));
    }
    return out;
}

/// Mean of the defined samples only; coverage is defined / R.
inline WindowedRelatedness windowed_mean(const Dataset& data, const AnimalId& i, const AnimalId& j,
                                         TimeWindow window) {
    auto [a, b] = detail::resolve_pair(data, i, j);
    TimeWindow::checked(static_cast<std::int64_t>(window.start_slot),
                        static_cast<std::int64_t>(window.end_slot), data.grid);
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t t = window.start_slot; t <= window.end_slot; ++t) {
        const auto s = detail::sample_at(*a, *b, data.arena.M, t);
        if (s.value) {
            sum += *s.value;
            ++defined;
        }
    }
    WindowedRelatedness out{canonical_pair(i, j), window, std::nullopt, 0.0};
    if (defined > 0) {
        out.mean = std::clamp(sum / static_cast<double>(defined), 0.0, data.arena.M);
        out.coverage = static_cast<double>(defined) / static_cast<double>(window.length());
    }
    return out;
}

struct MatrixEntry {
    WindowedRelatedness relatedness;
    double intensity = 0.0;  // mean / M in [0, 1], 0 when undefined
};

/// Upper triangle of the all-pairs windowed-mean matrix over `animals`
/// (sorted, canonical pair order).
struct RelatednessMatrix {
    TimeWindow window;
    std::vector<AnimalId> animals;
    std::vector<MatrixEntry> entries;

    std::size_t pair_count() const { return entries.size(); }

    const MatrixEntry& at(const AnimalId& i, const AnimalId& j) const {
        if (i == j) throw Error("self_pair", "matrix diagonal is not defined");
        const auto lo = std::lower_bound(animals.begin(), animals.end(), std::min(i, j));
        const auto hi = std::lower_bound(animals.begin(), animals.end(), std::max(i, j));
        if (lo == animals.end() || *lo != std::min(i, j) || hi == animals.end() || *hi != std::max(i, j)) {
            throw Error("unknown_animal", "animal not part of this matrix");
        }
        const std::size_t n = animals.size();
        const std::size_t r = static_cast<std::size_t>(lo - animals.begin());
        const std::size_t c = static_cast<std::size_t>(hi - animals.begin());
        // row-major upper triangle offset
        return entries[r * n - r * (r + 1) / 2 + (c - r - 1)];
    }
};

inline RelatednessMatrix relatedness_matrix(const Dataset& data, TimeWindow window,
                                            const std::optional<std::vector<AnimalId>>& filter = std::nullopt) {
    RelatednessMatrix out;
    out.window = TimeWindow::checked(static_cast<std::int64_t>(window.start_slot),
                                     static_cast<std::int64_t>(window.end_slot), data.grid);
    if (filter) {
        std::set<AnimalId> unique(filter->begin(), filter->end());
        for (const auto& id : unique) data.track(id);
        out.animals.assign(unique.begin(), unique.end());
    } else {
        out.animals = data.animals();
    }
    if (out.animals.size() < 2) {
        throw Error("too_few_animals", "relatedness matrix needs at least 2 animals");
    }
    const double M = data.arena.M;
    const std::size_t n = out.animals.size();
    out.entries.reserve(n * (n - 1) / 2);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = r + 1; c < n; ++c) {
            auto w = windowed_mean(data, out.animals[r], out.animals[c], out.window);
            const double intensity = (w.mean && M > 0.0) ? std::clamp(*w.mean / M, 0.0, 1.0) : 0.0;
            out.entries.push_back({std::move(w), intensity});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// i-G summary

struct NeighborRange {
    AnimalId animal;
    std::optional<double> r_now;
    double r_min = 0.0;
    double r_max = 0.0;
    double coverage = 0.0;
};

struct IGSummary {
    AnimalId focal;
    std::size_t time = 0;
    TimeWindow duration;
    std::vector<NeighborRange> neighbors;  // ordered by animal id
};

/// Relatedness of `focal` to every other animal over the trailing window
/// [t - duration_slots + 1, t], clamped to the grid.
inline IGSummary ig_summary(const Dataset& data, const AnimalId& focal, std::int64_t t,
                            std::int64_t duration_slots) {
    const auto& ft = data.track(focal);
    data.check_slot(t);
    if (duration_slots < 1) throw Error("invalid_duration", "duration must be at least 1 slot");
    const std::int64_t start = std::max<std::int64_t>(0, t - duration_slots + 1);
    IGSummary out{focal, static_cast<std::size_t>(t),
                  {static_cast<std::size_t>(start), static_cast<std::size_t>(t)}, {}};
    const double M = data.arena.M;
    for (const auto& [id, other] : data.tracks) {
        if (id == focal) continue;
        NeighborRange n{id, std::nullopt, 0.0, 0.0, 0.0};
        std::size_t defined = 0;
        for (std::size_t s = out.duration.start_slot; s <= out.duration.end_slot; ++s) {
            const auto sample = detail::sample_at(ft, other, M, s);
            if (!sample.value) continue;
            const double v = *sample.value;
            if (defined == 0) {
                n.r_min = n.r_max = v;
            } else {
                n.r_min = std::min(n.r_min, v);
                n.r_max = std::max(n.r_max, v);
            }
            ++defined;
            if (s == out.time) n.r_now = v;
        }
        if (defined == 0) continue;
        n.coverage = static_cast<double>(defined) / static_cast<double>(out.duration.length());
        out.neighbors.push_back(std::move(n));
    }
    return out;
}

enum class Trend { approaching, receding, mixed };

inline std::string_view to_string(Trend t) {
    switch (t) {
    case Trend::approaching: return "approaching";
    case Trend::receding: return "receding";
    case Trend::mixed: return "mixed";
    }
    return "mixed";
}

/// Which side of the [r_min, r_max] bar dominates around r_now.
inline Trend trend_sign(const NeighborRange& n) {
    if (!n.r_now) throw Error("undefined_now", "no relatedness defined at the current time");
    const double inner = *n.r_now - n.r_min;
    const double outer = n.r_max - *n.r_now;
    if (inner > outer) return Trend::approaching;
    if (inner < outer) return Trend::receding;
    return Trend::mixed;
}

// ---------------------------------------------------------------------------
// Stable pairing episodes

struct PairEpisode {
    AnimalPair pair;
    std::size_t start_slot = 0;
    std::size_t end_slot = 0;
    double mean_relatedness = 0.0;  // over the above-threshold samples

    std::size_t length() const { return end_slot - start_slot + 1; }
};

struct EpisodeParams {
    double threshold = 0.0;
    std::size_t min_len = 1;
    std::size_t max_dip = 0;
};

/// Maximal runs of P >= threshold, bridging dips (sub-threshold or undefined)
/// of at most max_dip slots. Episodes begin and end on above-threshold slots.
inline std::vector<PairEpisode> detect_stable_episodes(const Dataset& data, const AnimalId& i,
                                                       const AnimalId& j, const EpisodeParams& params,
                                                       std::optional<TimeWindow> window = std::nullopt) {
    const double M = data.arena.M;
    if (!(params.threshold >= 0.0 && params.threshold <= M)) {
        throw Error("invalid_threshold", "threshold must lie in [0, M]");
    }
    if (params.min_len < 1) throw Error("invalid_min_len", "min_len must be at least 1");
    const auto series = pairwise_series(data, i, j, window.value_or(TimeWindow::full(data.grid)));

    std::vector<PairEpisode> out;
    std::optional<std::size_t> start;
    std::size_t last_above = 0;
    double sum = 0.0;
    std::size_t count = 0;
    auto close = [&] {
        if (start && last_above - *start + 1 >= params.min_len) {
            out.push_back({series.pair, *start, last_above, sum / static_cast<double>(count)});
        }
        start.reset();
        sum = 0.0;
        count = 0;
    };
    for (const auto& s : series.samples) {
        const bool above = s.value && *s.value >= params.threshold;
        if (!above) {
            if (start && s.slot - last_above > params.max_dip) close();
            continue;
        }
        if (!start) start = s.slot;
        last_above = s.slot;
        sum += *s.value;
        ++count;
    }
    close();
    return out;
}

// ---------------------------------------------------------------------------
// Travel

struct TravelMetrics {
    double path_length = 0.0;
    double displacement = 0.0;
};

/// Path length sums steps between consecutive positioned slots only;
/// Unavailable slots are never bridged.
inline TravelMetrics travel_metrics(const Dataset& data, const AnimalId& animal, TimeWindow window) {
    const auto& track = data.track(animal);
    TimeWindow::checked(static_cast<std::int64_t>(window.start_slot),
                        static_cast<std::int64_t>(window.end_slot), data.grid);
    TravelMetrics out;
    PlanarPoint first, prev;
    bool any = false, linked = false;
    for (std::size_t t = window.start_slot; t <= window.end_slot; ++t) {
        const auto& s = track.slots[t];
        if (!s.positioned()) {
            linked = false;
            continue;
        }
        const PlanarPoint p = *s.position;
        if (linked) out.path_length += distance(prev, p);
        if (!any) first = p;
        any = linked = true;
        prev = p;
    }
    if (!any) throw Error("no_positions", "animal '" + animal.str() + "' has no positions in the window");
    out.displacement = distance(first, prev);
    return out;
}

/// One window per night: from the last slot at or before `start_hour` to the
/// first slot at or after `end_hour` the next morning. Only windows fully
/// inside the grid are returned.
inline std::vector<TimeWindow> night_windows(const GridSpec& grid, int start_hour = 21, int end_hour = 6) {
    std::vector<TimeWindow> out;
    const std::int64_t step = grid.step.count();
    const auto first_day = std::chrono::floor<std::chrono::days>(grid.epoch);
    const auto last_time = grid.epoch + static_cast<std::int64_t>(grid.slot_count - 1) * grid.step;
    for (auto day = first_day; day <= last_time; day += std::chrono::days(1)) {
        const Timestamp dusk = day + std::chrono::hours(start_hour);
        const Timestamp dawn = day + std::chrono::days(1) + std::chrono::hours(end_hour);
        const std::int64_t a = (dusk - grid.epoch).count();
        const std::int64_t b = (dawn - grid.epoch).count();
        if (a < 0) continue;
        const std::int64_t s0 = a / step;
        const std::int64_t s1 = (b + step - 1) / step;
        if (!grid.contains(s0) || !grid.contains(s1)) continue;
        out.push_back({static_cast<std::size_t>(s0), static_cast<std::size_t>(s1)});
    }
    return out;
}

}  // namespace relmove
