#pragma once

#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace relmove {

using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

/// Error carrying a short machine-readable code ("unknown_animal",
/// "time_out_of_range", ...). The service maps these straight to HTTP 4xx.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class AnimalId {
public:
    AnimalId() = default;
    explicit AnimalId(std::string token) : token_(std::move(token)) {
        if (token_.empty()) {
            throw Error("invalid_animal", "animal id must be non-empty");
        }
    }

    const std::string& str() const noexcept { return token_; }

    friend auto operator<=>(const AnimalId&, const AnimalId&) = default;
    friend bool operator==(const AnimalId&, const AnimalId&) = default;

private:
    std::string token_;
};

enum class Role { predator, herbivore, other };

inline std::string_view to_string(Role r) {
    switch (r) {
    case Role::predator: return "predator";
    case Role::herbivore: return "herbivore";
    case Role::other: return "other";
    }
    return "other";
}

inline Role role_from_string(std::string_view s) {
    if (s == "predator") return Role::predator;
    if (s == "herbivore") return Role::herbivore;
    if (s == "other") return Role::other;
    throw Error("invalid_role", "unknown species role '" + std::string(s) + "'");
}

struct Species {
    std::string name;
    Role role = Role::other;

    friend bool operator==(const Species&, const Species&) = default;
};

struct GridSpec {
    Timestamp epoch{};
    Seconds step{std::chrono::hours(2)};
    std::size_t slot_count = 1;

    void validate() const {
        if (step.count() <= 0) throw Error("invalid_grid", "grid step must be positive");
        if (slot_count < 1) throw Error("invalid_grid", "grid needs at least one slot");
    }

    bool contains(std::int64_t slot) const {
        return slot >= 0 && static_cast<std::size_t>(slot) < slot_count;
    }

    std::size_t slots_per_day() const {
        return static_cast<std::size_t>(std::chrono::days(1) / step);
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct PlanarPoint {
    double x = 0.0;  // meters east of the projection origin
    double y = 0.0;  // meters north of the projection origin

    friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

inline PlanarPoint operator+(PlanarPoint a, PlanarPoint b) { return {a.x + b.x, a.y + b.y}; }
inline PlanarPoint operator-(PlanarPoint a, PlanarPoint b) { return {a.x - b.x, a.y - b.y}; }
inline PlanarPoint operator*(double s, PlanarPoint p) { return {s * p.x, s * p.y}; }

inline double distance(PlanarPoint a, PlanarPoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// a + s (b - a)
inline PlanarPoint lerp(PlanarPoint a, PlanarPoint b, double s) {
    return {a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
}

struct Fix {
    AnimalId animal;
    Timestamp time{};
    double lat = 0.0;
    double lon = 0.0;
};

enum class SlotTag : std::uint8_t { Measured, Interpolated, Unavailable };

inline char tag_char(SlotTag t) {
    switch (t) {
    case SlotTag::Measured: return 'M';
    case SlotTag::Interpolated: return 'I';
    case SlotTag::Unavailable: return 'U';
    }
    return 'U';
}

inline std::string_view to_string(SlotTag t) {
    switch (t) {
    case SlotTag::Measured: return "measured";
    case SlotTag::Interpolated: return "interpolated";
    case SlotTag::Unavailable: return "unavailable";
    }
    return "unavailable";
}

struct SlotState {
    SlotTag tag = SlotTag::Unavailable;
    std::optional<PlanarPoint> position;
    int uncertainty = 0;

    static SlotState measured(PlanarPoint p) { return {SlotTag::Measured, p, 0}; }
    static SlotState interpolated(PlanarPoint p, int u) { return {SlotTag::Interpolated, p, u}; }
    static SlotState unavailable() { return {}; }

    bool positioned() const { return position.has_value(); }

    bool valid() const {
        switch (tag) {
        case SlotTag::Measured: return position.has_value() && uncertainty == 0;
        case SlotTag::Interpolated: return position.has_value() && uncertainty >= 1;
        case SlotTag::Unavailable: return !position.has_value();
        }
        return false;
    }

    friend bool operator==(const SlotState&, const SlotState&) = default;
};

struct TrackSeries {
    AnimalId animal;
    Species species;
    std::vector<SlotState> slots;
    std::size_t first_valid = 0;
    std::size_t last_valid = 0;
};

struct ArenaBounds {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;
    double M = 0.0;  // bounding-box diagonal, the largest possible separation

    bool contains(PlanarPoint p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
};

struct TimeWindow {
    std::size_t start_slot = 0;
    std::size_t end_slot = 0;  // inclusive

    std::size_t length() const { return end_slot - start_slot + 1; }

    static TimeWindow checked(std::int64_t start, std::int64_t end, const GridSpec& grid) {
        if (!grid.contains(start) || !grid.contains(end)) {
            throw Error("time_out_of_range", "window [" + std::to_string(start) + ", " +
                                                 std::to_string(end) + "] outside grid of " +
                                                 std::to_string(grid.slot_count) + " slots");
        }
        if (start > end) {
            throw Error("invalid_window", "window start after end");
        }
        return {static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
    }

    static TimeWindow full(const GridSpec& grid) { return {0, grid.slot_count - 1}; }

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct GeoOrigin {
    double lat = 0.0;
    double lon = 0.0;
};

struct Dataset {
    GridSpec grid;
    ArenaBounds arena;
    std::map<AnimalId, TrackSeries> tracks;
    std::map<std::string, Species> species_registry;
    GeoOrigin origin;

    const TrackSeries& track(const AnimalId& id) const {
        auto it = tracks.find(id);
        if (it == tracks.end()) {
            throw Error("unknown_animal", "unknown animal '" + id.str() + "'");
        }
        return it->second;
    }

    const TrackSeries& track(std::string_view id) const { return track(AnimalId(std::string(id))); }

    void check_slot(std::int64_t t) const {
        if (!grid.contains(t)) {
            throw Error("time_out_of_range", "slot " + std::to_string(t) + " outside grid of " +
                                                 std::to_string(grid.slot_count) + " slots");
        }
    }

    std::vector<AnimalId> animals() const {
        std::vector<AnimalId> ids;
        ids.reserve(tracks.size());
        for (const auto& [id, _] : tracks) ids.push_back(id);
        return ids;
    }
};

// ---------------------------------------------------------------------------
// Time grid arithmetic

/// Nearest grid slot for `time`, or nothing if the fix is off-grid by more
/// than step/4 or falls outside the grid.
inline std::optional<std::size_t> slot_of(Timestamp time, const GridSpec& grid) {
    const std::int64_t step = grid.step.count();
    const std::int64_t diff = (time - grid.epoch).count();
    // floor((diff + step/2) / step) with round-half-up for negative diffs too
    std::int64_t num = 2 * diff + step;
    std::int64_t den = 2 * step;
    std::int64_t index = num / den;
    if (num % den != 0 && num < 0) --index;
    if (!grid.contains(index)) return std::nullopt;
    const std::int64_t residual = diff - index * step;
    if (4 * std::abs(residual) > step) return std::nullopt;
    return static_cast<std::size_t>(index);
}

inline Timestamp time_of(std::int64_t slot, const GridSpec& grid) {
    if (!grid.contains(slot)) {
        throw Error("time_out_of_range", "slot " + std::to_string(slot) + " outside grid");
    }
    return grid.epoch + slot * grid.step;
}

enum class Season { summer, autumn, winter, spring };

inline std::string_view to_string(Season s) {
    switch (s) {
    case Season::summer: return "summer";
    case Season::autumn: return "autumn";
    case Season::winter: return "winter";
    case Season::spring: return "spring";
    }
    return "summer";
}

/// Southern-hemisphere meteorological season.
inline Season season_of(Timestamp time) {
    const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(time)};
    const unsigned m = static_cast<unsigned>(ymd.month());
    if (m == 12 || m <= 2) return Season::summer;
    if (m <= 5) return Season::autumn;
    if (m <= 8) return Season::winter;
    return Season::spring;
}

/// Seconds since UTC midnight.
inline std::int64_t time_of_day(Timestamp time) {
    return (time - std::chrono::floor<std::chrono::days>(time)).count();
}

// ---------------------------------------------------------------------------
// ISO-8601 (UTC, second resolution)

inline std::string format_iso(Timestamp time) {
    const auto day = std::chrono::floor<std::chrono::days>(time);
    const std::chrono::year_month_day ymd{day};
    const std::chrono::hh_mm_ss hms{time - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

/// Accepts `YYYY-MM-DDTHH:MM:SSZ` (a trailing `+00:00` is also taken as UTC).
inline std::optional<Timestamp> parse_iso(std::string_view text) {
    if (text.size() < 19) return std::nullopt;
    auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<int> {
        int v = 0;
        for (std::size_t k = pos; k < pos + n; ++k) {
            if (text[k] < '0' || text[k] > '9') return std::nullopt;
            v = v * 10 + (text[k] - '0');
        }
        return v;
    };
    if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
        text[13] != ':' || text[16] != ':') {
        return std::nullopt;
    }
    const auto rest = text.substr(19);
    if (!(rest.empty() || rest == "Z" || rest == "+00:00")) return std::nullopt;
    const auto y = digits(0, 4), mo = digits(5, 2), d = digits(8, 2);
    const auto h = digits(11, 2), mi = digits(14, 2), s = digits(17, 2);
    if (!y || !mo || !d || !h || !mi || !s) return std::nullopt;
    if (*h > 23 || *mi > 59 || *s > 59) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year(*y), std::chrono::month(*mo),
                                          std::chrono::day(*d)};
    if (!ymd.ok()) return std::nullopt;
    return std::chrono::sys_days(ymd) + std::chrono::hours(*h) + std::chrono::minutes(*mi) +
           std::chrono::seconds(*s);
}

}  // namespace relmove
