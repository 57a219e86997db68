#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relmove/core.hpp"
#include "relmove/gapfill.hpp"
#include "relmove/ingest.hpp"
#include "relmove/relatedness.hpp"

namespace relmove {

struct SpeciesCount {
    Species species;
    std::size_t count = 0;
    double mean_step = 350.0;  // meters per grid step
};

struct PlantedPairing {
    AnimalId leader;
    AnimalId follower;
    std::size_t start_slot = 0;
    std::size_t end_slot = 0;
    double tether = 200.0;
};

struct PlantedEncounter {
    AnimalId predator;
    std::vector<AnimalId> prey;  // prey.front() anchors the herd
    std::size_t start_slot = 0;
    std::size_t approach = 24;
    std::size_t hold = 24;
    std::size_t leave = 24;
    double hold_distance = 500.0;
    double herd_radius = 150.0;

    std::size_t end_slot() const { return start_slot + approach + hold + leave - 1; }
};

struct SynthConfig {
    std::uint64_t seed = 1;
    std::vector<SpeciesCount> animals;
    std::size_t months = 30;
    Seconds step{std::chrono::hours(2)};
    Timestamp start = std::chrono::sys_days(std::chrono::year(2011) / 1 / 1);
    double arena_width_km = 30.0;
    double arena_height_km = 40.0;
    GeoOrigin origin{-24.0, 31.5};  // arena center
    std::vector<PlantedPairing> planted_pairings;
    std::optional<PlantedEncounter> planted_encounter;
    double gap_rate = 0.0;     // probability per slot that a gap starts
    double mean_gap_len = 3.0; // slots, geometric
    double nocturnal_boost = 1.0;
    double heading_persistence = 0.8;

    std::size_t slot_count() const {
        return static_cast<std::size_t>(months * 30 * (std::chrono::days(1) / step));
    }

    std::vector<AnimalId> animal_ids() const {
        std::vector<AnimalId> ids;
        for (const auto& sc : animals) {
            for (std::size_t k = 1; k <= sc.count; ++k) ids.emplace_back(sc.species.name + "-" + std::to_string(k));
        }
        return ids;
    }

    void validate() const;
};

struct GroundTruthPairing {
    AnimalPair pair;
    std::size_t start_slot = 0;
    std::size_t end_slot = 0;
    double tether = 0.0;
};

struct EncounterPhases {
    AnimalId predator;
    std::vector<AnimalId> prey;
    TimeWindow increase;
    TimeWindow stable;
    TimeWindow decrease;
};

struct GroundTruth {
    std::vector<GroundTruthPairing> pairings;
    std::optional<EncounterPhases> encounter;
    std::vector<GapRecord> injected_gaps;
};

struct SynthOutput {
    std::string csv;
    GroundTruth truth;
};

inline void SynthConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error("invalid_config", msg); };
    if (animals.empty()) fail("no animals configured");
    std::set<std::string> names;
    for (const auto& sc : animals) {
        if (sc.species.name.empty()) fail("species name must be non-empty");
        if (sc.count == 0) fail("species '" + sc.species.name + "' has count 0");
        if (!(sc.mean_step > 0.0)) fail("species '" + sc.species.name + "' needs a positive mean step");
        if (!names.insert(sc.species.name).second) fail("species '" + sc.species.name + "' listed twice");
    }
    if (months == 0) fail("months must be positive");
    if (step.count() <= 0 || std::chrono::days(1) % step != Seconds(0)) fail("step must divide one day");
    if (!(arena_width_km > 0.0 && arena_height_km > 0.0)) fail("arena must have positive extent");
    if (!(gap_rate >= 0.0 && gap_rate <= 1.0)) fail("gap_rate must lie in [0, 1]");
    if (!(mean_gap_len >= 1.0)) fail("mean_gap_len must be at least 1");
    if (!(nocturnal_boost > 0.0)) fail("nocturnal_boost must be positive");
    if (!(heading_persistence >= 0.0 && heading_persistence <= 1.0)) fail("heading_persistence must lie in [0, 1]");

    const auto ids = animal_ids();
    const std::set<AnimalId> known(ids.begin(), ids.end());
    const std::size_t n = slot_count();
    std::set<AnimalId> constrained;
    auto claim = [&](const AnimalId& id) {
        if (!known.count(id)) fail("planted event references unknown animal '" + id.str() + "'");
        if (!constrained.insert(id).second) fail("animal '" + id.str() + "' is used by more than one planted event");
    };
    for (const auto& p : planted_pairings) {
        if (p.leader == p.follower) fail("planted pairing between '" + p.leader.str() + "' and itself");
        claim(p.leader);
        claim(p.follower);
        if (p.start_slot > p.end_slot || p.end_slot >= n) fail("planted pairing window outside the grid");
        if (!(p.tether > 0.0)) fail("tether must be positive");
    }
    if (planted_encounter) {
        const auto& e = *planted_encounter;
        claim(e.predator);
        if (e.prey.empty()) fail("encounter needs at least one prey animal");
        for (const auto& p : e.prey) claim(p);
        if (e.approach == 0 || e.hold == 0 || e.leave == 0) fail("encounter phases must be non-empty");
        if (e.end_slot() >= n) fail("planted encounter outside the grid");
        if (!(e.hold_distance > 0.0)) fail("hold_distance must be positive");
    }
}

/// The study census: 5 lions, 10 wildebeest and 10 zebras, 30 months of
/// 2-hourly fixes.
inline SynthConfig default_paper_shape() {
    SynthConfig c;
    c.animals = {
        {{"lion", Role::predator}, 5, 300.0},
        {{"wildebeest", Role::herbivore}, 10, 350.0},
        {{"zebra", Role::herbivore}, 10, 350.0},
    };
    c.months = 30;
    c.step = std::chrono::hours(2);
    c.gap_rate = 0.002;
    c.mean_gap_len = 3.0;
    c.nocturnal_boost = 3.0;
    return c;
}

/// Steps whose midpoint falls between 21:00 and 06:00.
inline bool is_night_step(Timestamp end_of_step, Seconds step) {
    const auto mid = time_of_day(end_of_step - step / 2);
    return mid >= 21 * 3600 || mid < 6 * 3600;
}

namespace detail {

class SynthRng {
public:
    explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::size_t geometric(double mean) {
        if (mean <= 1.0) return 1;
        const double q = 1.0 / mean;
        std::size_t k = 1;
        while (uniform() >= q) ++k;
        return k;
    }

private:
    std::mt19937_64 engine_;
};

struct Walker {
    AnimalId id;
    Species species;
    double mean_step = 0.0;
    PlanarPoint pos;
    double heading = 0.0;
};

inline PlanarPoint clamp_to(PlanarPoint p, double w, double h) {
    return {std::clamp(p.x, 0.0, w), std::clamp(p.y, 0.0, h)};
}

inline PlanarPoint tether_to(PlanarPoint anchor, PlanarPoint p, double radius) {
    const double d = distance(anchor, p);
    if (d <= radius) return p;
    return anchor + (radius / d) * (p - anchor);
}

}  // namespace detail

/// Correlated random walk in a reflecting rectangle with planted pairings,
/// a planted predator encounter and injected gaps. Deterministic per seed.
inline SynthOutput generate(const SynthConfig& config) {
    config.validate();
    const std::size_t n = config.slot_count();
    const double W = config.arena_width_km * 1000.0;
    const double H = config.arena_height_km * 1000.0;
    detail::SynthRng rng(config.seed);

    std::vector<detail::Walker> walkers;
    std::map<AnimalId, std::size_t> index;
    for (const auto& sc : config.animals) {
        for (std::size_t k = 1; k <= sc.count; ++k) {
            detail::Walker w{AnimalId(sc.species.name + "-" + std::to_string(k)), sc.species, sc.mean_step, {}, 0.0};
            w.pos = {rng.uniform() * W, rng.uniform() * H};
            w.heading = rng.uniform() * 2.0 * std::numbers::pi;
            index.emplace(w.id, walkers.size());
            walkers.push_back(std::move(w));
        }
    }
    const std::size_t count = walkers.size();
    std::vector<std::vector<PlanarPoint>> path(count, std::vector<PlanarPoint>(n));
    for (std::size_t a = 0; a < count; ++a) path[a][0] = walkers[a].pos;

    const double turn_sd = (1.0 - config.heading_persistence) * std::numbers::pi;
    constexpr std::size_t kDeparture = 3;
    const auto& enc = config.planted_encounter;

    auto in_encounter = [&](std::size_t t) { return enc && t >= enc->start_slot && t <= enc->end_slot(); };
    std::set<AnimalId> prey_set;
    if (enc) prey_set.insert(enc->prey.begin(), enc->prey.end());

    for (std::size_t t = 1; t < n; ++t) {
        const bool night = is_night_step(config.start + static_cast<std::int64_t>(t) * config.step, config.step);

        // free movement
        for (auto& w : walkers) {
            double step = w.mean_step * (0.5 + rng.uniform());
            w.heading += turn_sd * rng.normal();
            if (w.species.role == Role::predator && night) step *= config.nocturnal_boost;
            if (in_encounter(t) && prey_set.count(w.id)) step *= 0.1;  // grazing herd
            for (const auto& p : config.planted_pairings) {
                if (w.id == p.follower && t > p.end_slot && t <= p.end_slot + kDeparture) {
                    const PlanarPoint away = w.pos - walkers[index.at(p.leader)].pos;
                    w.heading = std::atan2(away.y, away.x);
                    step = 2.0 * w.mean_step;
                }
            }
            PlanarPoint next{w.pos.x + step * std::cos(w.heading), w.pos.y + step * std::sin(w.heading)};
            if (next.x < 0.0 || next.x > W) {
                next.x = next.x < 0.0 ? -next.x : 2.0 * W - next.x;
                w.heading = std::numbers::pi - w.heading;
            }
            if (next.y < 0.0 || next.y > H) {
                next.y = next.y < 0.0 ? -next.y : 2.0 * H - next.y;
                w.heading = -w.heading;
            }
            w.pos = detail::clamp_to(next, W, H);
        }

        // planted constraints
        for (const auto& p : config.planted_pairings) {
            if (t < p.start_slot || t > p.end_slot) continue;
            const auto& leader = walkers[index.at(p.leader)];
            auto& follower = walkers[index.at(p.follower)];
            follower.pos = detail::clamp_to(detail::tether_to(leader.pos, follower.pos, p.tether), W, H);
        }
        if (in_encounter(t)) {
            const auto& anchor = walkers[index.at(enc->prey.front())];
            PlanarPoint centroid{0.0, 0.0};
            for (const auto& id : enc->prey) {
                auto& member = walkers[index.at(id)];
                if (id != enc->prey.front()) {
                    member.pos = detail::clamp_to(detail::tether_to(anchor.pos, member.pos, enc->herd_radius), W, H);
                }
                centroid = centroid + member.pos;
            }
            centroid = (1.0 / static_cast<double>(enc->prey.size())) * centroid;

            auto& pred = walkers[index.at(enc->predator)];
            const std::size_t k = t - enc->start_slot;
            // use the pre-step bearing so the free step does not leak into approach/hold
            const PlanarPoint prev_rel = path[index.at(enc->predator)][t - 1] - centroid;
            double d = std::hypot(prev_rel.x, prev_rel.y);
            const PlanarPoint dir = d > 0.0 ? (1.0 / d) * prev_rel : PlanarPoint{1.0, 0.0};
            if (k < enc->approach) {
                const double remaining = static_cast<double>(enc->approach - k);
                const double target = d - (d - enc->hold_distance) / remaining;
                pred.pos = detail::clamp_to(centroid + target * dir, W, H);
            } else if (k < enc->approach + enc->hold) {
                pred.pos = detail::clamp_to(centroid + enc->hold_distance * dir, W, H);
            } else {
                const double step = distance(pred.pos, path[index.at(enc->predator)][t - 1]);
                pred.pos = detail::clamp_to(centroid + (d + step) * dir, W, H);
            }
            pred.heading = std::atan2(dir.y, dir.x);
        }
        for (std::size_t a = 0; a < count; ++a) path[a][t] = walkers[a].pos;
    }

    // ground truth for planted events
    GroundTruth truth;
    std::map<AnimalId, std::vector<std::pair<std::size_t, std::size_t>>> protect;
    for (const auto& p : config.planted_pairings) {
        truth.pairings.push_back({canonical_pair(p.leader, p.follower), p.start_slot, p.end_slot, p.tether});
        for (const auto& id : {p.leader, p.follower}) protect[id].emplace_back(p.start_slot, p.end_slot + kDeparture);
    }
    if (enc) {
        const std::size_t s = enc->start_slot;
        truth.encounter = EncounterPhases{enc->predator, enc->prey,
                                          {s, s + enc->approach - 1},
                                          {s + enc->approach, s + enc->approach + enc->hold - 1},
                                          {s + enc->approach + enc->hold, enc->end_slot()}};
        protect[enc->predator].emplace_back(s, enc->end_slot());
        for (const auto& id : enc->prey) protect[id].emplace_back(s, enc->end_slot());
    }

    // gaps: interior runs only, separated by at least one measured slot
    constexpr std::size_t kMargin = 3;
    std::vector<std::vector<bool>> missing(count, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < count; ++a) {
        const auto& guarded = protect[walkers[a].id];
        std::size_t t = 1;
        while (t + 1 < n) {
            if (config.gap_rate <= 0.0 || rng.uniform() >= config.gap_rate) {
                ++t;
                continue;
            }
            const std::size_t len = rng.geometric(config.mean_gap_len);
            const std::size_t end = t + len - 1;
            bool ok = end + 1 < n;
            for (auto [lo, hi] : guarded) {
                if (end + kMargin >= lo && t <= hi + kMargin) ok = false;
            }
            if (!ok) {
                ++t;
                continue;
            }
            for (std::size_t k = t; k <= end; ++k) missing[a][k] = true;
            truth.injected_gaps.push_back({walkers[a].id, t, end, t - 1, end + 1});
            t = end + 2;
        }
    }
    std::sort(truth.injected_gaps.begin(), truth.injected_gaps.end(),
              [](const GapRecord& x, const GapRecord& y) { return std::tie(x.animal, x.start_slot) < std::tie(y.animal, y.start_slot); });

    const PlanarPoint center{W / 2.0, H / 2.0};
    std::ostringstream csv;
    csv << kCsvHeader << '\n';
    char buf[64];
    for (std::size_t t = 0; t < n; ++t) {
        const std::string stamp = format_iso(config.start + static_cast<std::int64_t>(t) * config.step);
        for (std::size_t a = 0; a < count; ++a) {
            if (missing[a][t]) continue;
            const GeoOrigin g = unproject(path[a][t] - center, config.origin);
            std::snprintf(buf, sizeof buf, "%.8f,%.8f", g.lat, g.lon);
            csv << walkers[a].id.str() << ',' << walkers[a].species.name << ',' << stamp << ',' << buf << '\n';
        }
    }
    return {csv.str(), std::move(truth)};
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const GroundTruth& truth, const SynthConfig& config) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["seed"] = config.seed;
    j["epoch"] = format_iso(config.start);
    j["step_seconds"] = config.step.count();
    j["slot_count"] = config.slot_count();
    j["pairings"] = ordered_json::array();
    for (const auto& p : truth.pairings) {
        j["pairings"].push_back({{"a", p.pair.first.str()}, {"b", p.pair.second.str()},
                                 {"start_slot", p.start_slot}, {"end_slot", p.end_slot}, {"tether_m", p.tether}});
    }
    if (truth.encounter) {
        const auto& e = *truth.encounter;
        ordered_json prey = ordered_json::array();
        for (const auto& id : e.prey) prey.push_back(id.str());
        auto win = [](TimeWindow w) { return ordered_json::array({w.start_slot, w.end_slot}); };
        j["encounter"] = {{"predator", e.predator.str()}, {"prey", prey}, {"increase", win(e.increase)},
                          {"stable", win(e.stable)}, {"decrease", win(e.decrease)}};
    } else {
        j["encounter"] = nullptr;
    }
    j["gaps"] = ordered_json::array();
    for (const auto& g : truth.injected_gaps) {
        j["gaps"].push_back({{"animal", g.animal.str()}, {"start_slot", g.start_slot}, {"end_slot", g.end_slot},
                             {"left_flank", g.left_flank}, {"right_flank", g.right_flank}});
    }
    return j;
}

/// Reads a synth config document; absent keys keep the study-census defaults.
inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
    SynthConfig c = default_paper_shape();
    try {
        if (!j.is_object()) throw Error("invalid_config", "synth config must be a JSON object");
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("months")) c.months = j.at("months").get<std::size_t>();
        if (j.contains("step_hours")) {
            const double h = j.at("step_hours").get<double>();
            if (!(h > 0.0)) throw Error("invalid_config", "step_hours must be positive");
            c.step = Seconds(static_cast<std::int64_t>(std::llround(h * 3600.0)));
        }
        if (j.contains("start")) {
            const auto t = parse_iso(j.at("start").get<std::string>());
            if (!t) throw Error("invalid_config", "start must be an ISO-8601 UTC timestamp");
            c.start = *t;
        }
        if (j.contains("arena_km")) {
            c.arena_width_km = j.at("arena_km").at(0).get<double>();
            c.arena_height_km = j.at("arena_km").at(1).get<double>();
        }
        if (j.contains("origin")) c.origin = {j.at("origin").at("lat").get<double>(), j.at("origin").at("lon").get<double>()};
        if (j.contains("animals")) {
            c.animals.clear();
            for (const auto& a : j.at("animals")) {
                SpeciesCount sc;
                sc.species.name = a.at("species").get<std::string>();
                sc.species.role = role_from_string(a.value("role", std::string(to_string(SpeciesConfig{}.role_of(sc.species.name)))));
                sc.count = a.at("count").get<std::size_t>();
                sc.mean_step = a.value("mean_step_m", 350.0);
                c.animals.push_back(std::move(sc));
            }
        }
        if (j.contains("planted_pairings")) {
            for (const auto& p : j.at("planted_pairings")) {
                c.planted_pairings.push_back({AnimalId(p.at("a").get<std::string>()), AnimalId(p.at("b").get<std::string>()),
                                              p.at("start_slot").get<std::size_t>(), p.at("end_slot").get<std::size_t>(),
                                              p.value("tether_m", 200.0)});
            }
        }
        if (j.contains("planted_encounter") && !j.at("planted_encounter").is_null()) {
            const auto& e = j.at("planted_encounter");
            PlantedEncounter pe;
            pe.predator = AnimalId(e.at("predator").get<std::string>());
            for (const auto& p : e.at("prey")) pe.prey.emplace_back(p.get<std::string>());
            pe.start_slot = e.at("start_slot").get<std::size_t>();
            pe.approach = e.value("approach", pe.approach);
            pe.hold = e.value("hold", pe.hold);
            pe.leave = e.value("leave", pe.leave);
            pe.hold_distance = e.value("hold_distance_m", pe.hold_distance);
            c.planted_encounter = std::move(pe);
        }
        if (j.contains("gap_rate")) c.gap_rate = j.at("gap_rate").get<double>();
        if (j.contains("mean_gap_len")) c.mean_gap_len = j.at("mean_gap_len").get<double>();
        if (j.contains("nocturnal_boost")) c.nocturnal_boost = j.at("nocturnal_boost").get<double>();
        if (j.contains("heading_persistence")) c.heading_persistence = j.at("heading_persistence").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid_config", std::string("synth config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace relmove
