#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "relmove/core.hpp"

namespace relmove {

inline constexpr int kArchiveVersion = 1;

/// Self-contained dataset document. Slot states are packed per track as a
/// state string ("M", "I", "U" per slot) plus parallel x / y / u arrays;
/// positions of Unavailable slots are null.
inline nlohmann::json archive_to_json(const Dataset& data) {
    using nlohmann::json;
    json j;
    j["version"] = kArchiveVersion;
    j["grid"] = {{"epoch", format_iso(data.grid.epoch)},
                 {"step_seconds", data.grid.step.count()},
                 {"slot_count", data.grid.slot_count}};
    j["arena"] = {{"min_x", data.arena.min_x}, {"min_y", data.arena.min_y}, {"max_x", data.arena.max_x},
                  {"max_y", data.arena.max_y}, {"M", data.arena.M}};
    j["origin"] = {{"lat", data.origin.lat}, {"lon", data.origin.lon}};
    j["species"] = json::object();
    for (const auto& [name, sp] : data.species_registry) j["species"][name] = to_string(sp.role);
    j["tracks"] = json::array();
    for (const auto& [id, track] : data.tracks) {
        std::string states;
        json xs = json::array(), ys = json::array(), us = json::array();
        states.reserve(track.slots.size());
        for (const auto& s : track.slots) {
            states.push_back(tag_char(s.tag));
            if (s.position) {
                xs.push_back(s.position->x);
                ys.push_back(s.position->y);
            } else {
                xs.push_back(nullptr);
                ys.push_back(nullptr);
            }
            us.push_back(s.uncertainty);
        }
        j["tracks"].push_back({{"animal", id.str()},
                               {"species", track.species.name},
                               {"first_valid", track.first_valid},
                               {"last_valid", track.last_valid},
                               {"states", states},
                               {"x", xs},
                               {"y", ys},
                               {"u", us}});
    }
    return j;
}

inline Dataset archive_from_json(const nlohmann::json& j) {
    auto bad = [](const std::string& msg) { return Error("invalid_archive", msg); };
    try {
        if (j.at("version").get<int>() != kArchiveVersion) throw bad("unsupported archive version");
        Dataset data;
        const auto& g = j.at("grid");
        const auto epoch = parse_iso(g.at("epoch").get<std::string>());
        if (!epoch) throw bad("bad grid epoch");
        data.grid = {*epoch, Seconds(g.at("step_seconds").get<std::int64_t>()), g.at("slot_count").get<std::size_t>()};
        data.grid.validate();
        const auto& a = j.at("arena");
        data.arena = {a.at("min_x").get<double>(), a.at("min_y").get<double>(), a.at("max_x").get<double>(),
                      a.at("max_y").get<double>(), a.at("M").get<double>()};
        data.origin = {j.at("origin").at("lat").get<double>(), j.at("origin").at("lon").get<double>()};
        for (const auto& [name, role] : j.at("species").items()) {
            data.species_registry[name] = Species{name, role_from_string(role.get<std::string>())};
        }
        for (const auto& t : j.at("tracks")) {
            TrackSeries track;
            track.animal = AnimalId(t.at("animal").get<std::string>());
            const auto species = t.at("species").get<std::string>();
            auto sp = data.species_registry.find(species);
            if (sp == data.species_registry.end()) throw bad("track species '" + species + "' not in registry");
            track.species = sp->second;
            track.first_valid = t.at("first_valid").get<std::size_t>();
            track.last_valid = t.at("last_valid").get<std::size_t>();
            const auto states = t.at("states").get<std::string>();
            const auto& xs = t.at("x");
            const auto& ys = t.at("y");
            const auto& us = t.at("u");
            const std::size_t n = data.grid.slot_count;
            if (states.size() != n || xs.size() != n || ys.size() != n || us.size() != n) {
                throw bad("track '" + track.animal.str() + "' length does not match grid");
            }
            track.slots.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                auto& s = track.slots[k];
                switch (states[k]) {
                case 'M': s.tag = SlotTag::Measured; break;
                case 'I': s.tag = SlotTag::Interpolated; break;
                case 'U': s.tag = SlotTag::Unavailable; break;
                default: throw bad("unknown slot state '" + std::string(1, states[k]) + "'");
                }
                if (!xs[k].is_null()) s.position = PlanarPoint{xs[k].get<double>(), ys[k].get<double>()};
                s.uncertainty = us[k].get<int>();
                if (!s.valid()) throw bad("inconsistent slot " + std::to_string(k) + " in '" + track.animal.str() + "'");
            }
            if (track.first_valid > track.last_valid || track.last_valid >= n) {
                throw bad("bad lifespan for '" + track.animal.str() + "'");
            }
            auto id = track.animal;
            if (!data.tracks.emplace(id, std::move(track)).second) throw bad("duplicate animal '" + id.str() + "'");
        }
        return data;
    } catch (const nlohmann::json::exception& e) {
        throw bad(std::string("archive: ") + e.what());
    }
}

inline void save_archive(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("io_error", "cannot write archive '" + path + "'");
    out << archive_to_json(data).dump();
    if (!out) throw Error("io_error", "failed writing archive '" + path + "'");
}

inline Dataset load_archive(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open archive '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid_archive", std::string("archive: ") + e.what());
    }
    return archive_from_json(j);
}

}  // namespace relmove
