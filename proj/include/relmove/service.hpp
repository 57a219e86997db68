#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relmove/core.hpp"
#include "relmove/gapfill.hpp"
#include "relmove/relatedness.hpp"
#include "relmove/smoothing.hpp"

namespace relmove {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Body serialization: stable key order, floats fixed at 6 decimals.

namespace detail {

inline void write_json(const ojson& j, std::string& out) {
    switch (j.type()) {
    case ojson::value_t::object: {
        out.push_back('{');
        bool first = true;
        for (const auto& [key, value] : j.items()) {
            if (!first) out.push_back(',');
            first = false;
            out += ojson(key).dump();
            out.push_back(':');
            write_json(value, out);
        }
        out.push_back('}');
        break;
    }
    case ojson::value_t::array: {
        out.push_back('[');
        bool first = true;
        for (const auto& value : j) {
            if (!first) out.push_back(',');
            first = false;
            write_json(value, out);
        }
        out.push_back(']');
        break;
    }
    case ojson::value_t::number_float: {
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            out += "null";
            break;
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        std::string_view s(buf);
        if (s == "-0.000000") s = "0.000000";
        out += s;
        break;
    }
    default: out += j.dump(); break;
    }
}

}  // namespace detail

inline std::string to_body(const ojson& j) {
    std::string out;
    detail::write_json(j, out);
    return out;
}

// ---------------------------------------------------------------------------
// Views

/// Named control-panel states persisted as one JSON document
/// (`{"views": {name: config}}`), rewritten on every PUT.
class ViewStore {
public:
    ViewStore() = default;

    explicit ViewStore(std::filesystem::path path) : path_(std::move(path)) {
        if (std::filesystem::exists(path_)) {
            std::ifstream in(path_);
            if (!in) throw Error("io_error", "cannot read view store '" + path_.string() + "'");
            try {
                const auto doc = ojson::parse(in);
                for (const auto& [name, cfg] : doc.at("views").items()) views_[name] = cfg;
            } catch (const nlohmann::json::exception& e) {
                throw Error("io_error", "corrupt view store '" + path_.string() + "': " + e.what());
            }
        }
        std::ofstream probe(path_, std::ios::app);
        if (!probe) throw Error("io_error", "view store '" + path_.string() + "' is not writable");
        probe.close();
        if (views_.empty()) flush();
    }

    std::optional<ojson> get(const std::string& name) const {
        std::lock_guard lock(mu_);
        if (auto it = views_.find(name); it != views_.end()) return std::optional<ojson>(std::in_place, it->second);
        return std::nullopt;
    }

    std::vector<ojson> list() const {
        std::lock_guard lock(mu_);
        std::vector<ojson> out;
        for (const auto& [name, cfg] : views_) out.push_back(cfg);
        return out;
    }

    void put(const std::string& name, ojson config) {
        std::lock_guard lock(mu_);
        views_[name] = std::move(config);
        flush();
    }

private:
    void flush() const {
        if (path_.empty()) return;
        ojson doc;
        doc["views"] = ojson::object();
        for (const auto& [name, cfg] : views_) doc["views"][name] = cfg;
        const auto tmp = path_.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            if (!out) throw Error("io_error", "cannot write view store '" + tmp + "'");
            out << to_body(doc);
        }
        std::filesystem::rename(tmp, path_);
    }

    std::filesystem::path path_;
    std::map<std::string, ojson> views_;
    mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// API

struct ApiRequest {
    std::string method = "GET";
    std::string path;
    std::map<std::string, std::string> params;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string body;
};

struct DisplayConfig {
    double base_radius = 150.0;  // meters
    double radius_growth = 100.0;
    double radius_cap = 1500.0;
    std::int64_t default_duration = 12;
    std::size_t default_buckets = 100;
    double default_episode_margin = 1000.0;  // threshold = M - margin
};

/// Routes API requests onto the engine. Pure over the dataset apart from
/// the view store; every read endpoint returns a byte-stable body.
class Api {
public:
    Api(const Dataset& data, ViewStore& views, DisplayConfig display = {})
        : data_(data), views_(views), display_(display) {}

    ApiResponse handle(const ApiRequest& req) const {
        try {
            return route(req);
        } catch (const Error& e) {
            return error(status_for(e.code()), e.code(), e.what());
        }
    }

private:
    static int status_for(const std::string& code) {
        if (code == "unknown_animal" || code == "view_not_found" || code == "not_found") return 404;
        if (code == "method_not_allowed") return 405;
        if (code == "io_error") return 500;
        return 400;
    }

    static ApiResponse error(int status, const std::string& code, const std::string& message) {
        ojson j;
        j["error"] = {{"code", code}, {"message", message}};
        return {status, to_body(j)};
    }

    static ApiResponse ok(const ojson& j) { return {200, to_body(j)}; }

    // -- parameter helpers -------------------------------------------------

    static std::optional<std::string> param(const ApiRequest& req, const std::string& name) {
        if (auto it = req.params.find(name); it != req.params.end() && !it->second.empty()) return it->second;
        return std::nullopt;
    }

    static std::string require(const ApiRequest& req, const std::string& name) {
        auto v = param(req, name);
        if (!v) throw Error("missing_parameter", "missing query parameter '" + name + "'");
        return *v;
    }

    static std::int64_t as_int(const std::string& name, const std::string& text) {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
            throw Error("bad_parameter", "parameter '" + name + "' must be an integer");
        }
        return v;
    }

    static double as_double(const std::string& name, const std::string& text) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
            throw Error("bad_parameter", "parameter '" + name + "' must be a number");
        }
        return v;
    }

    static std::int64_t int_or(const ApiRequest& req, const std::string& name, std::int64_t fallback) {
        auto v = param(req, name);
        return v ? as_int(name, *v) : fallback;
    }

    AnimalId animal(const ApiRequest& req, const std::string& name) const {
        AnimalId id(require(req, name));
        data_.track(id);
        return id;
    }

    std::int64_t last_slot() const { return static_cast<std::int64_t>(data_.grid.slot_count) - 1; }

    TimeWindow range(const ApiRequest& req) const {
        return TimeWindow::checked(int_or(req, "from", 0), int_or(req, "to", last_slot()), data_.grid);
    }

    TimeWindow trailing(std::int64_t t, std::int64_t dur) const {
        data_.check_slot(t);
        if (dur < 1) throw Error("invalid_duration", "duration must be at least 1 slot");
        return {static_cast<std::size_t>(std::max<std::int64_t>(0, t - dur + 1)), static_cast<std::size_t>(t)};
    }

    ojson window_json(TimeWindow w) const {
        return {{"start_slot", w.start_slot},
                {"end_slot", w.end_slot},
                {"start_time", format_iso(time_of(static_cast<std::int64_t>(w.start_slot), data_.grid))},
                {"end_time", format_iso(time_of(static_cast<std::int64_t>(w.end_slot), data_.grid))}};
    }

    static ojson point_json(const std::optional<PlanarPoint>& p) {
        if (!p) return nullptr;
        return {{"x", p->x}, {"y", p->y}};
    }

    static ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

    // -- routing -----------------------------------------------------------

    ApiResponse route(const ApiRequest& req) const {
        const std::string& p = req.path;
        if (p == "/api/views" || p.starts_with("/api/views/")) return views(req);
        if (req.method != "GET") throw Error("method_not_allowed", req.method + " not allowed on " + p);
        if (p == "/api/meta") return ok(meta());
        if (p == "/api/animals") return ok(animals());
        if (p == "/api/snapshot") return ok(snapshot(req));
        if (p == "/api/trace") return ok(trace(req));
        if (p == "/api/relatedness/pair") return ok(pair(req));
        if (p == "/api/relatedness/matrix") return ok(matrix(req));
        if (p == "/api/relatedness/ig") return ok(ig(req));
        if (p == "/api/uncertainty") return ok(uncertainty(req));
        if (p == "/api/episodes") return ok(episodes(req));
        if (p == "/api/travel") return ok(travel(req));
        throw Error("not_found", "no endpoint " + p);
    }

    ojson grid_json() const {
        return {{"epoch", format_iso(data_.grid.epoch)},
                {"step_seconds", data_.grid.step.count()},
                {"slot_count", data_.grid.slot_count},
                {"end", format_iso(time_of(last_slot(), data_.grid))}};
    }

    ojson meta() const {
        ojson j;
        j["grid"] = grid_json();
        const auto& a = data_.arena;
        j["arena"] = {{"min_x", a.min_x}, {"min_y", a.min_y}, {"max_x", a.max_x}, {"max_y", a.max_y}, {"M", a.M}};
        j["origin"] = {{"lat", data_.origin.lat}, {"lon", data_.origin.lon}};
        std::map<std::string, std::size_t> census;
        for (const auto& [id, t] : data_.tracks) ++census[t.species.name];
        j["animal_count"] = data_.tracks.size();
        j["census"] = ojson::array();
        for (const auto& [name, count] : census) {
            j["census"].push_back({{"species", name},
                                   {"role", to_string(data_.species_registry.at(name).role)},
                                   {"count", count}});
        }
        return j;
    }

    ojson animals() const {
        ojson list = ojson::array();
        for (const auto& [id, t] : data_.tracks) {
            list.push_back({{"id", id.str()},
                            {"species", t.species.name},
                            {"role", to_string(t.species.role)},
                            {"lifespan", window_json({t.first_valid, t.last_valid})}});
        }
        return {{"animals", list}};
    }

    ojson snapshot(const ApiRequest& req) const {
        const std::int64_t t = as_int("t", require(req, "t"));
        data_.check_slot(t);
        const std::int64_t dur = int_or(req, "dur", display_.default_duration);
        if (dur < 1) throw Error("invalid_duration", "duration must be at least 1 slot");
        const Timestamp when = time_of(t, data_.grid);
        ojson j;
        j["time"] = {{"slot", t}, {"iso", format_iso(when)}, {"season", to_string(season_of(when))}};
        j["duration_slots"] = dur;
        j["entities"] = ojson::array();
        for (const auto& [id, track] : data_.tracks) {
            const auto& s = track.slots[static_cast<std::size_t>(t)];
            j["entities"].push_back(
                {{"animal", id.str()},
                 {"species", track.species.name},
                 {"role", to_string(track.species.role)},
                 {"position", point_json(s.position)},
                 {"state", to_string(s.tag)},
                 {"uncertainty", s.uncertainty},
                 {"display_radius", spatial_uncertainty_radius(s.uncertainty, display_.base_radius,
                                                               display_.radius_growth, display_.radius_cap)}});
        }
        return j;
    }

    ojson trace(const ApiRequest& req) const {
        const AnimalId id = animal(req, "animal");
        const auto window = trailing(int_or(req, "t", last_slot()), int_or(req, "dur", display_.default_duration));
        SmoothingConfig cfg;
        cfg.mode = curve_mode_from_string(param(req, "mode").value_or("none"));
        if (auto a = param(req, "alpha")) {
            const double alpha = as_double("alpha", *a);
            if (alpha < 0.0 || alpha > 1.0) throw Error("bad_parameter", "alpha must lie in [0, 1]");
            cfg.alpha = alpha;
        }
        const auto line = trace_line(data_, id, window, cfg);
        ojson j;
        j["animal"] = id.str();
        j["window"] = window_json(window);
        j["mode"] = to_string(cfg.mode);
        j["alpha"] = cfg.clamped_alpha();
        j["vertices"] = ojson::array();
        for (const auto& v : line.vertices) j["vertices"].push_back(ojson::array({v.x, v.y}));
        j["breaks"] = line.breaks;
        j["sources"] = ojson::array();
        for (std::size_t k = 0; k < line.source_slots.size(); ++k) {
            j["sources"].push_back({{"slot", line.source_slots[k]}, {"state", to_string(line.source_flags[k])}});
        }
        return j;
    }

    ojson pair(const ApiRequest& req) const {
        const AnimalId i = animal(req, "i");
        const AnimalId j = animal(req, "j");
        if (i == j) throw Error("self_pair", "i and j must differ");
        const auto series = pairwise_series(data_, i, j, range(req));
        ojson out;
        out["pair"] = ojson::array({series.pair.first.str(), series.pair.second.str()});
        out["window"] = window_json(series.window);
        out["M"] = data_.arena.M;
        out["samples"] = ojson::array();
        for (const auto& s : series.samples) {
            out["samples"].push_back({{"slot", s.slot},
                                      {"value", optional_number(s.value)},
                                      {"provenance", to_string(s.provenance)}});
        }
        return out;
    }

    ojson matrix(const ApiRequest& req) const {
        const auto window = range(req);
        std::optional<std::vector<AnimalId>> filter;
        if (auto species = param(req, "species")) {
            std::set<std::string> wanted;
            std::string_view rest = *species;
            while (!rest.empty()) {
                const auto comma = rest.find(',');
                wanted.emplace(rest.substr(0, comma));
                rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
            }
            for (const auto& name : wanted) {
                if (!data_.species_registry.count(name)) throw Error("unknown_species", "unknown species '" + name + "'");
            }
            filter.emplace();
            for (const auto& [id, t] : data_.tracks) {
                if (wanted.count(t.species.name)) filter->push_back(id);
            }
        }
        const auto m = relatedness_matrix(data_, window, filter);
        ojson j;
        j["window"] = window_json(m.window);
        j["M"] = data_.arena.M;
        j["animals"] = ojson::array();
        for (const auto& id : m.animals) j["animals"].push_back(id.str());
        j["pairs"] = ojson::array();
        for (const auto& e : m.entries) {
            j["pairs"].push_back({{"i", e.relatedness.pair.first.str()},
                                  {"j", e.relatedness.pair.second.str()},
                                  {"mean", optional_number(e.relatedness.mean)},
                                  {"coverage", e.relatedness.coverage},
                                  {"intensity", e.intensity}});
        }
        return j;
    }

    ojson ig(const ApiRequest& req) const {
        const AnimalId focal = animal(req, "focal");
        const std::int64_t t = as_int("t", require(req, "t"));
        const auto summary = ig_summary(data_, focal, t, int_or(req, "dur", display_.default_duration));
        ojson j;
        j["focal"] = focal.str();
        j["time"] = {{"slot", summary.time}, {"iso", format_iso(time_of(t, data_.grid))}};
        j["window"] = window_json(summary.duration);
        j["M"] = data_.arena.M;
        j["neighbors"] = ojson::array();
        for (const auto& n : summary.neighbors) {
            j["neighbors"].push_back({{"animal", n.animal.str()},
                                      {"r_now", optional_number(n.r_now)},
                                      {"r_min", n.r_min},
                                      {"r_max", n.r_max},
                                      {"coverage", n.coverage},
                                      {"trend", n.r_now ? ojson(to_string(trend_sign(n))) : ojson(nullptr)}});
        }
        return j;
    }

    ojson uncertainty(const ApiRequest& req) const {
        const std::int64_t buckets = int_or(req, "buckets", static_cast<std::int64_t>(display_.default_buckets));
        if (buckets < 1) throw Error("invalid_buckets", "buckets must be at least 1");
        const auto ranges = bucket_ranges(data_.grid.slot_count, static_cast<std::size_t>(buckets));
        ojson j;
        j["buckets"] = ojson::array();
        for (auto [lo, hi] : ranges) j["buckets"].push_back(ojson::array({lo, hi - 1}));
        j["rows"] = ojson::array();
        for (const auto& row : availability_heatmap(data_, static_cast<std::size_t>(buckets))) {
            ojson cells = ojson::array();
            for (const auto& c : row.cells) {
                cells.push_back({{"state", to_string(c.state)}, {"max_uncertainty", c.max_uncertainty}});
            }
            j["rows"].push_back({{"animal", row.animal.str()}, {"cells", cells}});
        }
        return j;
    }

    ojson episodes(const ApiRequest& req) const {
        const AnimalId i = animal(req, "i");
        const AnimalId j = animal(req, "j");
        if (i == j) throw Error("self_pair", "i and j must differ");
        EpisodeParams params;
        params.threshold = param(req, "threshold") ? as_double("threshold", *param(req, "threshold"))
                                                   : std::max(0.0, data_.arena.M - display_.default_episode_margin);
        const auto min_len = int_or(req, "min_len", 12);
        const auto max_dip = int_or(req, "max_dip", 3);
        if (min_len < 1) throw Error("invalid_min_len", "min_len must be at least 1");
        if (max_dip < 0) throw Error("bad_parameter", "max_dip must be non-negative");
        params.min_len = static_cast<std::size_t>(min_len);
        params.max_dip = static_cast<std::size_t>(max_dip);
        const auto found = detect_stable_episodes(data_, i, j, params);
        const auto canon = canonical_pair(i, j);
        ojson out;
        out["pair"] = ojson::array({canon.first.str(), canon.second.str()});
        out["threshold"] = params.threshold;
        out["min_len"] = params.min_len;
        out["max_dip"] = params.max_dip;
        out["episodes"] = ojson::array();
        for (const auto& e : found) {
            out["episodes"].push_back({{"window", window_json({e.start_slot, e.end_slot})},
                                       {"length", e.length()},
                                       {"mean_relatedness", e.mean_relatedness}});
        }
        return out;
    }

    ojson travel(const ApiRequest& req) const {
        const AnimalId id = animal(req, "animal");
        const auto window = range(req);
        const auto m = travel_metrics(data_, id, window);
        return {{"animal", id.str()},
                {"window", window_json(window)},
                {"path_length", m.path_length},
                {"displacement", m.displacement}};
    }

    // -- views -------------------------------------------------------------

    ojson validate_view(const std::string& name, const ojson& body) const {
        auto bad = [](const std::string& msg) { return Error("invalid_view", msg); };
        if (!body.is_object()) throw bad("view body must be a JSON object");
        try {
            ojson v;
            v["name"] = name;
            const auto t = body.at("current_time").get<std::int64_t>();
            if (!data_.grid.contains(t)) throw bad("current_time outside the grid");
            v["current_time"] = t;
            const auto dur = body.at("duration_slots").get<std::int64_t>();
            if (dur < 1) throw bad("duration_slots must be at least 1");
            v["duration_slots"] = dur;
            const auto mode = body.at("curve_mode").get<std::string>();
            curve_mode_from_string(mode);
            v["curve_mode"] = mode;
            const auto alpha = body.at("alpha").get<double>();
            if (!(alpha >= 0.0 && alpha <= 1.0)) throw bad("alpha must lie in [0, 1]");
            v["alpha"] = alpha;
            v["species_filter"] = ojson::array();
            for (const auto& s : body.value("species_filter", ojson::array())) {
                const auto name_s = s.get<std::string>();
                if (!data_.species_registry.count(name_s)) throw bad("unknown species '" + name_s + "'");
                v["species_filter"].push_back(name_s);
            }
            const auto known = [&](const std::string& id) {
                if (!data_.tracks.count(AnimalId(id))) throw bad("unknown animal '" + id + "'");
                return id;
            };
            const auto& pair = body.value("selected_pair", ojson(nullptr));
            if (pair.is_null()) {
                v["selected_pair"] = nullptr;
            } else {
                if (!pair.is_array() || pair.size() != 2) throw bad("selected_pair must be two animal ids");
                const auto a = known(pair[0].get<std::string>());
                const auto b = known(pair[1].get<std::string>());
                if (a == b) throw bad("selected_pair must name two distinct animals");
                v["selected_pair"] = ojson::array({a, b});
            }
            const auto& focal = body.value("focal", ojson(nullptr));
            v["focal"] = focal.is_null() ? ojson(nullptr) : ojson(known(focal.get<std::string>()));
            return v;
        } catch (const nlohmann::json::exception& e) {
            throw bad(std::string("view: ") + e.what());
        }
    }

    ApiResponse views(const ApiRequest& req) const {
        const std::string prefix = "/api/views/";
        std::string name = req.path.size() > prefix.size() ? req.path.substr(prefix.size()) : std::string{};
        if (req.method == "GET") {
            if (name.empty()) {
                ojson list = ojson::array();
                for (auto& v : views_.list()) list.push_back(std::move(v));
                return ok({{"views", list}});
            }
            auto v = views_.get(name);
            if (!v) throw Error("view_not_found", "no view named '" + name + "'");
            return ok(*v);
        }
        if (req.method == "PUT") {
            ojson body;
            try {
                body = ojson::parse(req.body);
            } catch (const nlohmann::json::exception&) {
                throw Error("invalid_view", "view body is not valid JSON");
            }
            if (name.empty()) {
                if (!body.is_object() || !body.contains("name") || !body["name"].is_string()) {
                    throw Error("invalid_view", "PUT /api/views needs a string 'name'");
                }
                name = body["name"].get<std::string>();
            }
            if (name.empty() || name.find('/') != std::string::npos) throw Error("invalid_view", "bad view name");
            auto v = validate_view(name, body);
            views_.put(name, v);
            return ok(v);
        }
        throw Error("method_not_allowed", req.method + " not allowed on " + req.path);
    }

    const Dataset& data_;
    ViewStore& views_;
    DisplayConfig display_;
};

}  // namespace relmove
