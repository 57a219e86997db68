#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relmove/core.hpp"
#include "relmove/gapfill.hpp"

namespace relmove {

inline constexpr double kEarthRadius = 6'371'000.0;
inline constexpr double kDefaultMaxSpeed = 8.0;  // m/s
inline constexpr std::string_view kCsvHeader = "animal_id,species,timestamp,lat,lon";

struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct ParsedFixes {
    std::vector<Fix> fixes;
    std::map<AnimalId, std::string> species_of;
    std::vector<RowError> errors;
    std::size_t rows_read = 0;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace detail

/// Reads collar CSV. Malformed rows are reported with their 1-based line
/// number and skipped; only an unreadable stream throws.
inline ParsedFixes parse_fix_csv(std::istream& in) {
    if (!in) throw Error("io_error", "fix stream is not readable");
    ParsedFixes out;
    std::string line;
    std::size_t line_no = 0;

    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = detail::trim(line);
        if (!have_header) {
            if (trimmed.empty()) continue;
            std::string_view header = trimmed;
            if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
            if (header != kCsvHeader) {
                out.errors.push_back({line_no, "expected header '" + std::string(kCsvHeader) + "'"});
                return out;
            }
            have_header = true;
            continue;
        }
        if (trimmed.empty()) continue;
        ++out.rows_read;

        const auto cells = detail::split_commas(trimmed);
        if (cells.size() != 5) {
            out.errors.push_back({line_no, "expected 5 columns, got " + std::to_string(cells.size())});
            continue;
        }
        const auto id = detail::trim(cells[0]);
        const auto species = detail::trim(cells[1]);
        if (id.empty()) {
            out.errors.push_back({line_no, "empty animal_id"});
            continue;
        }
        if (species.empty()) {
            out.errors.push_back({line_no, "empty species"});
            continue;
        }
        const auto time = parse_iso(detail::trim(cells[2]));
        if (!time) {
            out.errors.push_back({line_no, "bad timestamp '" + std::string(cells[2]) + "'"});
            continue;
        }
        const auto lat = detail::parse_double(cells[3]);
        const auto lon = detail::parse_double(cells[4]);
        if (!lat || !lon) {
            out.errors.push_back({line_no, "non-numeric coordinate"});
            continue;
        }
        if (std::abs(*lat) > 90.0) {
            out.errors.push_back({line_no, "lat out of range"});
            continue;
        }
        if (std::abs(*lon) > 180.0) {
            out.errors.push_back({line_no, "lon out of range"});
            continue;
        }
        AnimalId animal{std::string(id)};
        auto [it, inserted] = out.species_of.try_emplace(animal, std::string(species));
        if (!inserted && it->second != species) {
            out.errors.push_back({line_no, "animal '" + animal.str() + "' changes species from '" +
                                               it->second + "' to '" + std::string(species) + "'"});
            continue;
        }
        out.fixes.push_back({std::move(animal), *time, *lat, *lon});
    }
    if (!have_header) out.errors.push_back({line_no == 0 ? 1 : line_no, "missing header"});
    return out;
}

// ---------------------------------------------------------------------------
// Projection

struct ProjectedFix {
    AnimalId animal;
    Timestamp time{};
    PlanarPoint point;
};

inline PlanarPoint project(double lat, double lon, GeoOrigin origin) {
    constexpr double deg = std::numbers::pi / 180.0;
    return {kEarthRadius * (lon - origin.lon) * deg * std::cos(origin.lat * deg),
            kEarthRadius * (lat - origin.lat) * deg};
}

inline GeoOrigin unproject(PlanarPoint p, GeoOrigin origin) {
    constexpr double deg = std::numbers::pi / 180.0;
    return {origin.lat + p.y / (kEarthRadius * deg),
            origin.lon + p.x / (kEarthRadius * deg * std::cos(origin.lat * deg))};
}

struct Projection {
    std::vector<ProjectedFix> points;
    GeoOrigin origin;
};

/// Equirectangular projection about the centroid of the fixes.
inline Projection project_to_plane(const std::vector<Fix>& fixes) {
    if (fixes.empty()) throw Error("empty_input", "cannot project an empty fix list");
    GeoOrigin origin;
    for (const auto& f : fixes) {
        origin.lat += f.lat;
        origin.lon += f.lon;
    }
    origin.lat /= static_cast<double>(fixes.size());
    origin.lon /= static_cast<double>(fixes.size());

    Projection out{{}, origin};
    out.points.reserve(fixes.size());
    for (const auto& f : fixes) out.points.push_back({f.animal, f.time, project(f.lat, f.lon, origin)});
    return out;
}

// ---------------------------------------------------------------------------
// Screening

struct ScreenResult {
    std::vector<ProjectedFix> kept;
    std::vector<ProjectedFix> dropped;
};

/// Greedy forward scan per animal: a fix is dropped when the straight-line
/// speed from the last kept fix of that animal exceeds max_speed. Input must be
/// time-sorted within each animal; the interleaving of animals is preserved.
inline ScreenResult screen_unrealistic(const std::vector<ProjectedFix>& fixes, double max_speed) {
    if (!(max_speed > 0.0)) throw Error("invalid_speed", "max_speed must be positive");
    ScreenResult out;
    std::map<AnimalId, const ProjectedFix*> last_kept;
    for (const auto& f : fixes) {
        auto it = last_kept.find(f.animal);
        if (it == last_kept.end()) {
            out.kept.push_back(f);
            last_kept.emplace(f.animal, &f);
            continue;
        }
        const ProjectedFix& prev = *it->second;
        const double dt = std::chrono::duration<double>(f.time - prev.time).count();
        const double d = distance(prev.point, f.point);
        const bool too_fast = dt > 0.0 ? d / dt > max_speed : d > 0.0;
        if (too_fast) {
            out.dropped.push_back(f);
        } else {
            out.kept.push_back(f);
            it->second = &f;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Regularization

struct RegularizeResult {
    std::map<AnimalId, TrackSeries> tracks;
    std::size_t dropped_jitter = 0;
};

/// Snaps fixes onto the grid. Interior gaps are left Unavailable; filling them
/// is gapfill's job so provenance can be labeled there.
inline RegularizeResult regularize(const std::vector<ProjectedFix>& fixes, const GridSpec& grid) {
    grid.validate();
    RegularizeResult out;
    // residual (seconds from nominal) of the fix currently occupying a slot
    std::map<AnimalId, std::vector<std::int64_t>> occupant;
    for (const auto& f : fixes) {
        const auto slot = slot_of(f.time, grid);
        if (!slot) {
            ++out.dropped_jitter;
            continue;
        }
        auto [it, fresh] = out.tracks.try_emplace(f.animal);
        auto& track = it->second;
        auto& residuals = occupant[f.animal];
        if (fresh) {
            track.animal = f.animal;
            track.slots.assign(grid.slot_count, SlotState::unavailable());
            residuals.assign(grid.slot_count, 0);
        }
        const std::int64_t residual = std::abs((f.time - (grid.epoch + static_cast<std::int64_t>(*slot) * grid.step)).count());
        auto& s = track.slots[*slot];
        if (s.tag == SlotTag::Measured && residuals[*slot] <= residual) continue;
        s = SlotState::measured(f.point);
        residuals[*slot] = residual;
    }
    for (auto& [id, track] : out.tracks) {
        const auto first = std::find_if(track.slots.begin(), track.slots.end(),
                                        [](const SlotState& s) { return s.tag == SlotTag::Measured; });
        const auto last = std::find_if(track.slots.rbegin(), track.slots.rend(),
                                       [](const SlotState& s) { return s.tag == SlotTag::Measured; });
        track.first_valid = static_cast<std::size_t>(first - track.slots.begin());
        track.last_valid = track.slots.size() - 1 - static_cast<std::size_t>(last - track.slots.rbegin());
    }
    return out;
}

/// Bounding box over all Measured positions; M is its diagonal.
inline ArenaBounds compute_arena(const std::map<AnimalId, TrackSeries>& tracks) {
    bool any = false;
    ArenaBounds a;
    for (const auto& [id, track] : tracks) {
        for (const auto& s : track.slots) {
            if (s.tag != SlotTag::Measured) continue;
            const PlanarPoint p = *s.position;
            if (!any) {
                a.min_x = a.max_x = p.x;
                a.min_y = a.max_y = p.y;
                any = true;
            } else {
                a.min_x = std::min(a.min_x, p.x);
                a.max_x = std::max(a.max_x, p.x);
                a.min_y = std::min(a.min_y, p.y);
                a.max_y = std::max(a.max_y, p.y);
            }
        }
    }
    if (!any) throw Error("no_measured_positions", "dataset has no measured positions");
    a.M = std::hypot(a.max_x - a.min_x, a.max_y - a.min_y);
    return a;
}

/// Grid anchored at the earliest fix rounded down to the hour, long enough to
/// hold the latest fix.
inline GridSpec make_grid(const std::vector<ProjectedFix>& fixes, Seconds step) {
    if (fixes.empty()) throw Error("empty_input", "cannot build a grid without fixes");
    if (step.count() <= 0) throw Error("invalid_grid", "grid step must be positive");
    auto [lo, hi] = std::minmax_element(fixes.begin(), fixes.end(),
                                        [](const auto& a, const auto& b) { return a.time < b.time; });
    GridSpec grid;
    grid.epoch = std::chrono::floor<std::chrono::hours>(lo->time);
    grid.step = step;
    const auto span = (hi->time - grid.epoch).count();
    grid.slot_count = static_cast<std::size_t>((2 * span + step.count()) / (2 * step.count())) + 1;
    return grid;
}

// ---------------------------------------------------------------------------
// Species roles

/// Maps species name to role. Names not present fall back to defaults for the
/// three study species, else `other`.
struct SpeciesConfig {
    std::map<std::string, Role> roles;

    Role role_of(const std::string& name) const {
        if (auto it = roles.find(name); it != roles.end()) return it->second;
        if (name == "lion") return Role::predator;
        if (name == "wildebeest" || name == "zebra") return Role::herbivore;
        return Role::other;
    }

    /// `{"species": {"lion": "predator", "zebra": "herbivore"}}`
    static SpeciesConfig from_json(const nlohmann::json& j) {
        SpeciesConfig cfg;
        if (!j.is_object() || !j.contains("species") || !j["species"].is_object()) {
            throw Error("invalid_species_config", "species config needs a 'species' object");
        }
        for (const auto& [name, role] : j["species"].items()) {
            if (!role.is_string()) {
                throw Error("invalid_species_config", "role for '" + name + "' must be a string");
            }
            cfg.roles[name] = role_from_string(role.get<std::string>());
        }
        return cfg;
    }

    static SpeciesConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("io_error", "cannot open species config '" + path + "'");
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw Error("invalid_species_config", std::string("species config: ") + e.what());
        }
    }
};

// ---------------------------------------------------------------------------
// Full pipeline

struct IngestReport {
    std::size_t rows_read = 0;
    std::size_t rows_malformed = 0;
    std::size_t fixes_dropped_jitter = 0;
    std::size_t fixes_dropped_speed = 0;
    std::map<AnimalId, std::map<std::size_t, std::size_t>> per_animal_gap_histogram;
    std::vector<RowError> row_errors;
};

struct IngestOptions {
    double max_speed = kDefaultMaxSpeed;
    Seconds step{std::chrono::hours(2)};
};

struct IngestResult {
    Dataset dataset;
    IngestReport report;
};

inline IngestResult ingest_csv(std::istream& in, const SpeciesConfig& species = {},
                               const IngestOptions& options = {}) {
    IngestResult out;
    auto parsed = parse_fix_csv(in);
    out.report.rows_read = parsed.rows_read;
    out.report.rows_malformed = parsed.errors.size();
    out.report.row_errors = parsed.errors;
    if (parsed.fixes.empty()) throw Error("no_fixes", "input contains no valid fixes");

    auto projection = project_to_plane(parsed.fixes);
    auto& points = projection.points;
    std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
        return std::tie(a.animal, a.time) < std::tie(b.animal, b.time);
    });
    auto screened = screen_unrealistic(points, options.max_speed);
    out.report.fixes_dropped_speed = screened.dropped.size();

    Dataset& data = out.dataset;
    data.origin = projection.origin;
    data.grid = make_grid(screened.kept, options.step);
    auto regular = regularize(screened.kept, data.grid);
    out.report.fixes_dropped_jitter = regular.dropped_jitter;

    for (auto& [id, raw] : regular.tracks) {
        const std::string& name = parsed.species_of.at(id);
        Species sp{name, species.role_of(name)};
        data.species_registry.emplace(name, sp);
        raw.species = sp;
        auto filled = interpolate_gaps(std::move(raw));
        auto& hist = out.report.per_animal_gap_histogram[id];
        for (const auto& g : filled.gaps) ++hist[g.length()];
        data.tracks.emplace(id, std::move(filled.track));
    }
    data.arena = compute_arena(data.tracks);
    return out;
}

}  // namespace relmove
