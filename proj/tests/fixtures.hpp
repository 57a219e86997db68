#pragma once

#include <random>
#include <string>
#include <vector>

#include "relmove/core.hpp"
#include "relmove/ingest.hpp"

namespace relmove::testing {

inline SlotState meas(double x, double y) { return SlotState::measured({x, y}); }
inline SlotState interp(double x, double y, int u) { return SlotState::interpolated({x, y}, u); }
inline SlotState gone() { return SlotState::unavailable(); }

struct TrackSpec {
    std::string id;
    std::vector<SlotState> slots;
    std::string species = "zebra";
};

inline GridSpec grid_of(std::size_t slots) {
    GridSpec g;
    g.epoch = std::chrono::sys_days(std::chrono::year(2011) / 1 / 1);
    g.step = std::chrono::hours(2);
    g.slot_count = slots;
    return g;
}

/// Builds a Dataset directly from slot states; lifespans and arena are
/// derived the same way ingest derives them.
inline Dataset make_dataset(const std::vector<TrackSpec>& tracks_in) {
    Dataset data;
    data.grid = grid_of(tracks_in.front().slots.size());
    SpeciesConfig roles;
    for (const auto& ts : tracks_in) {
        TrackSeries t;
        t.animal = AnimalId(ts.id);
        t.species = Species{ts.species, roles.role_of(ts.species)};
        data.species_registry[ts.species] = t.species;
        t.slots = ts.slots;
        std::size_t first = t.slots.size(), last = 0;
        for (std::size_t k = 0; k < t.slots.size(); ++k) {
            if (t.slots[k].positioned()) {
                first = std::min(first, k);
                last = k;
            }
        }
        t.first_valid = first == t.slots.size() ? 0 : first;
        t.last_valid = last;
        data.tracks.emplace(t.animal, std::move(t));
    }
    data.arena = compute_arena(data.tracks);
    return data;
}

/// Small random dataset: measured/interpolated/unavailable slots scattered
/// over a 10 km box whose corners are pinned by two measured fixes, so every
/// position lies inside the arena.
inline Dataset random_dataset(std::mt19937_64& rng, std::size_t animals, std::size_t slots) {
    std::uniform_real_distribution<double> coord(-5000.0, 5000.0);
    std::uniform_int_distribution<int> state(0, 9);
    std::vector<TrackSpec> tracks_in;
    for (std::size_t a = 0; a < animals; ++a) {
        TrackSpec ts{"a" + std::to_string(a), {}};
        for (std::size_t t = 0; t < slots; ++t) {
            const int s = state(rng);
            if (s < 6) ts.slots.push_back(meas(coord(rng), coord(rng)));
            else if (s < 8) ts.slots.push_back(interp(coord(rng), coord(rng), 1 + s % 3));
            else ts.slots.push_back(gone());
        }
        tracks_in.push_back(std::move(ts));
    }
    tracks_in.front().slots.front() = meas(-5000.0, -5000.0);
    tracks_in.back().slots.back() = meas(5000.0, 5000.0);
    return make_dataset(tracks_in);
}

}  // namespace relmove::testing
