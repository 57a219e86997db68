#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <thread>

#include "relmove/http.hpp"
#include "relmove/service.hpp"
#include "relmove/synthgen.hpp"

using namespace relmove;

namespace {

const Dataset& synthetic() {
    static const Dataset data = [] {
        SynthConfig c = default_paper_shape();
        c.months = 1;
        c.seed = 77;
        c.gap_rate = 0.01;
        c.planted_pairings.push_back({AnimalId("zebra-1"), AnimalId("zebra-2"), 60, 200, 200});
        std::istringstream in(generate(c).csv);
        return ingest_csv(in).dataset;
    }();
    return data;
}

/// Value as it appears on the wire: fixed at 6 decimals.
double wire(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::strtod(buf, nullptr);
}

std::string tmp_path(const std::string& name) {
    std::filesystem::create_directories(RELMOVE_TEST_TMP);
    return std::string(RELMOVE_TEST_TMP) + "/" + name;
}

class ApiTest : public ::testing::Test {
protected:
    ViewStore views;
    Api api{synthetic(), views};

    nlohmann::json get(const std::string& path, std::map<std::string, std::string> params = {}, int status = 200) {
        const auto r = api.handle({"GET", path, std::move(params), ""});
        EXPECT_EQ(r.status, status) << r.body;
        return nlohmann::json::parse(r.body);
    }

    std::string error_code(const std::string& path, std::map<std::string, std::string> params, int status) {
        return get(path, std::move(params), status)["error"]["code"].get<std::string>();
    }
};

}  // namespace

TEST_F(ApiTest, MetaReportsCensusAndArena) {
    const auto j = get("/api/meta");
    EXPECT_EQ(j["animal_count"], 25);
    EXPECT_EQ(j["census"].size(), 3u);
    EXPECT_EQ(j["census"][0]["species"], "lion");
    EXPECT_EQ(j["census"][0]["count"], 5);
    EXPECT_EQ(j["census"][0]["role"], "predator");
    EXPECT_EQ(j["arena"]["M"].get<double>(), wire(synthetic().arena.M));
    EXPECT_EQ(j["grid"]["slot_count"], synthetic().grid.slot_count);
    EXPECT_EQ(j["grid"]["epoch"], "2011-01-01T00:00:00Z");
}

TEST_F(ApiTest, AnimalsListLifespans) {
    const auto j = get("/api/animals");
    ASSERT_EQ(j["animals"].size(), 25u);
    const auto& first = j["animals"][0];
    const auto& t = synthetic().track(first["id"].get<std::string>());
    EXPECT_EQ(first["lifespan"]["start_slot"], t.first_valid);
    EXPECT_EQ(first["lifespan"]["end_slot"], t.last_valid);
}

TEST_F(ApiTest, SnapshotMatchesSlotStates) {
    const auto& d = synthetic();
    const auto j = get("/api/snapshot", {{"t", "100"}, {"dur", "24"}});
    EXPECT_EQ(j["time"]["slot"], 100);
    EXPECT_EQ(j["time"]["iso"], format_iso(time_of(100, d.grid)));
    EXPECT_EQ(j["time"]["season"], "summer");
    EXPECT_EQ(j["duration_slots"], 24);
    ASSERT_EQ(j["entities"].size(), d.tracks.size());
    for (const auto& e : j["entities"]) {
        const auto& s = d.track(e["animal"].get<std::string>()).slots[100];
        EXPECT_EQ(e["state"], std::string(to_string(s.tag)));
        EXPECT_EQ(e["uncertainty"], s.uncertainty);
        EXPECT_EQ(e["position"].is_null(), !s.position);
        if (s.position) {
            EXPECT_EQ(e["position"]["x"].get<double>(), wire(s.position->x));
            EXPECT_EQ(e["position"]["y"].get<double>(), wire(s.position->y));
        }
        EXPECT_EQ(e["display_radius"].get<double>(), spatial_uncertainty_radius(s.uncertainty, 150, 100, 1500));
    }
}

TEST_F(ApiTest, SnapshotRejectsOutOfRangeTime) {
    EXPECT_EQ(error_code("/api/snapshot", {{"t", "999999"}}, 400), "time_out_of_range");
    EXPECT_EQ(error_code("/api/snapshot", {{"t", "-1"}}, 400), "time_out_of_range");
    EXPECT_EQ(error_code("/api/snapshot", {}, 400), "missing_parameter");
    EXPECT_EQ(error_code("/api/snapshot", {{"t", "abc"}}, 400), "bad_parameter");
}

TEST_F(ApiTest, TraceMatchesEngine) {
    const auto& d = synthetic();
    const auto j = get("/api/trace", {{"animal", "lion-2"}, {"t", "200"}, {"dur", "36"}, {"mode", "cardinal"}, {"alpha", "0.5"}});
    const auto line = trace_line(d, AnimalId("lion-2"), {165, 200}, {CurveMode::Cardinal, 0.5, 8});
    ASSERT_EQ(j["vertices"].size(), line.vertices.size());
    for (std::size_t k = 0; k < line.vertices.size(); ++k) {
        EXPECT_EQ(j["vertices"][k][0].get<double>(), wire(line.vertices[k].x));
        EXPECT_EQ(j["vertices"][k][1].get<double>(), wire(line.vertices[k].y));
    }
    EXPECT_EQ(j["breaks"].get<std::vector<std::size_t>>(), line.breaks);
    EXPECT_EQ(j["window"]["start_slot"], 165);
    EXPECT_EQ(error_code("/api/trace", {{"animal", "lion-2"}, {"mode", "zigzag"}}, 400), "invalid_mode");
    EXPECT_EQ(error_code("/api/trace", {{"animal", "hippo-1"}}, 404), "unknown_animal");
}

TEST_F(ApiTest, PairMatchesEngine) {
    const auto& d = synthetic();
    const auto j = get("/api/relatedness/pair", {{"i", "zebra-2"}, {"j", "zebra-1"}, {"from", "50"}, {"to", "80"}});
    const auto series = pairwise_series(d, AnimalId("zebra-1"), AnimalId("zebra-2"), {50, 80});
    EXPECT_EQ(j["pair"][0], "zebra-1");
    ASSERT_EQ(j["samples"].size(), 31u);
    for (std::size_t k = 0; k < series.samples.size(); ++k) {
        const auto& s = series.samples[k];
        EXPECT_EQ(j["samples"][k]["slot"], s.slot);
        EXPECT_EQ(j["samples"][k]["provenance"], std::string(to_string(s.provenance)));
        if (s.value) {
            EXPECT_EQ(j["samples"][k]["value"].get<double>(), wire(*s.value));
        } else {
            EXPECT_TRUE(j["samples"][k]["value"].is_null());
        }
    }
    EXPECT_EQ(error_code("/api/relatedness/pair", {{"i", "zebra-1"}, {"j", "zebra-1"}}, 400), "self_pair");
    EXPECT_EQ(error_code("/api/relatedness/pair", {{"i", "zebra-1"}, {"j", "zebra-2"}, {"from", "9"}, {"to", "3"}}, 400),
              "invalid_window");
}

TEST_F(ApiTest, MatrixMatchesEngineAndFilters) {
    const auto& d = synthetic();
    const auto j = get("/api/relatedness/matrix", {{"from", "0"}, {"to", "100"}});
    const auto m = relatedness_matrix(d, {0, 100});
    ASSERT_EQ(j["pairs"].size(), 300u);
    for (std::size_t k = 0; k < m.entries.size(); ++k) {
        const auto& e = m.entries[k];
        EXPECT_EQ(j["pairs"][k]["i"], e.relatedness.pair.first.str());
        EXPECT_EQ(j["pairs"][k]["intensity"].get<double>(), wire(e.intensity));
        EXPECT_EQ(j["pairs"][k]["coverage"].get<double>(), wire(e.relatedness.coverage));
        if (e.relatedness.mean) {
            EXPECT_EQ(j["pairs"][k]["mean"].get<double>(), wire(*e.relatedness.mean));
        }
    }
    const auto lions = get("/api/relatedness/matrix", {{"species", "lion"}});
    EXPECT_EQ(lions["pairs"].size(), 10u);
    const auto mixed = get("/api/relatedness/matrix", {{"species", "lion,zebra"}});
    EXPECT_EQ(mixed["pairs"].size(), 105u);
    EXPECT_EQ(error_code("/api/relatedness/matrix", {{"species", "hippo"}}, 400), "unknown_species");
}

TEST_F(ApiTest, IGMatchesEngine) {
    const auto& d = synthetic();
    const auto j = get("/api/relatedness/ig", {{"focal", "lion-1"}, {"t", "150"}, {"dur", "20"}});
    const auto s = ig_summary(d, AnimalId("lion-1"), 150, 20);
    ASSERT_EQ(j["neighbors"].size(), s.neighbors.size());
    for (std::size_t k = 0; k < s.neighbors.size(); ++k) {
        const auto& n = s.neighbors[k];
        EXPECT_EQ(j["neighbors"][k]["animal"], n.animal.str());
        EXPECT_EQ(j["neighbors"][k]["r_min"].get<double>(), wire(n.r_min));
        EXPECT_EQ(j["neighbors"][k]["r_max"].get<double>(), wire(n.r_max));
        if (n.r_now) {
            EXPECT_EQ(j["neighbors"][k]["trend"], std::string(to_string(trend_sign(n))));
        }
    }
}

TEST_F(ApiTest, UncertaintyMatchesHeatmap) {
    const auto& d = synthetic();
    const auto j = get("/api/uncertainty", {{"buckets", "30"}});
    const auto rows = availability_heatmap(d, 30);
    ASSERT_EQ(j["rows"].size(), rows.size());
    ASSERT_EQ(j["buckets"].size(), 30u);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].cells.size(); ++c) {
            EXPECT_EQ(j["rows"][r]["cells"][c]["state"], std::string(to_string(rows[r].cells[c].state)));
            EXPECT_EQ(j["rows"][r]["cells"][c]["max_uncertainty"], rows[r].cells[c].max_uncertainty);
        }
    }
    EXPECT_EQ(error_code("/api/uncertainty", {{"buckets", "0"}}, 400), "invalid_buckets");
}

TEST_F(ApiTest, EpisodesRecoverTetheredPair) {
    const auto& d = synthetic();
    const auto j = get("/api/episodes", {{"i", "zebra-1"}, {"j", "zebra-2"}});
    const auto eps = detect_stable_episodes(d, AnimalId("zebra-1"), AnimalId("zebra-2"), {d.arena.M - 1000, 12, 3});
    ASSERT_EQ(j["episodes"].size(), eps.size());
    ASSERT_FALSE(eps.empty());
    EXPECT_EQ(j["episodes"][0]["window"]["start_slot"], eps[0].start_slot);
    EXPECT_EQ(j["episodes"][0]["mean_relatedness"].get<double>(), wire(eps[0].mean_relatedness));
    EXPECT_EQ(error_code("/api/episodes", {{"i", "zebra-1"}, {"j", "zebra-2"}, {"threshold", "-5"}}, 400),
              "invalid_threshold");
}

TEST_F(ApiTest, TravelMatchesEngine) {
    const auto& d = synthetic();
    const auto j = get("/api/travel", {{"animal", "wildebeest-3"}, {"from", "10"}, {"to", "90"}});
    const auto m = travel_metrics(d, AnimalId("wildebeest-3"), {10, 90});
    EXPECT_EQ(j["path_length"].get<double>(), wire(m.path_length));
    EXPECT_EQ(j["displacement"].get<double>(), wire(m.displacement));
}

TEST_F(ApiTest, UnknownRoutesAndMethods) {
    EXPECT_EQ(error_code("/api/nope", {}, 404), "not_found");
    const auto r = api.handle({"PUT", "/api/meta", {}, ""});
    EXPECT_EQ(r.status, 405);
}

TEST_F(ApiTest, RepeatedQueriesAreByteIdentical) {
    const std::vector<ApiRequest> reqs{
        {"GET", "/api/meta", {}, ""},
        {"GET", "/api/snapshot", {{"t", "33"}}, ""},
        {"GET", "/api/relatedness/matrix", {{"from", "5"}, {"to", "60"}}, ""},
        {"GET", "/api/trace", {{"animal", "zebra-4"}, {"t", "300"}, {"dur", "50"}, {"mode", "natural"}}, ""},
    };
    for (const auto& r : reqs) {
        const auto a = api.handle(r).body;
        ViewStore other;
        Api fresh(synthetic(), other);
        EXPECT_EQ(a, api.handle(r).body);
        EXPECT_EQ(a, fresh.handle(r).body);
    }
}

TEST(Body, FixedSixDecimals) {
    ojson j;
    j["a"] = 1.0 / 3.0;
    j["b"] = -0.0000001;
    j["c"] = 7;
    j["d"] = nullptr;
    EXPECT_EQ(to_body(j), R"({"a":0.333333,"b":0.000000,"c":7,"d":null})");
}

TEST(Views, PutGetAndPersist) {
    const auto path = tmp_path("views_persist.json");
    std::filesystem::remove(path);
    const std::string body =
        R"({"current_time": 40, "duration_slots": 12, "curve_mode": "bundle", "alpha": 0.75,
            "species_filter": ["lion"], "selected_pair": ["zebra-1", "zebra-2"], "focal": "lion-3"})";
    std::string stored;
    {
        ViewStore store(path);
        Api api(synthetic(), store);
        const auto put = api.handle({"PUT", "/api/views/dusk", {}, body});
        ASSERT_EQ(put.status, 200) << put.body;
        const auto got = api.handle({"GET", "/api/views/dusk", {}, ""});
        EXPECT_EQ(got.body, put.body);
        stored = got.body;
        const auto j = nlohmann::json::parse(stored);
        EXPECT_EQ(j["name"], "dusk");
        EXPECT_EQ(j["alpha"].get<double>(), 0.75);
        EXPECT_EQ(j["focal"], "lion-3");
    }
    ViewStore reopened(path);
    Api api(synthetic(), reopened);
    const auto list = nlohmann::json::parse(api.handle({"GET", "/api/views", {}, ""}).body);
    ASSERT_EQ(list["views"].size(), 1u);
    EXPECT_EQ(api.handle({"GET", "/api/views/dusk", {}, ""}).body, stored);
    EXPECT_EQ(api.handle({"GET", "/api/views/dawn", {}, ""}).status, 404);
}

TEST(Views, InvalidViewsRejected) {
    ViewStore store;
    Api api(synthetic(), store);
    auto put = [&](const std::string& body) { return api.handle({"PUT", "/api/views/x", {}, body}).status; };
    EXPECT_EQ(put("not json"), 400);
    EXPECT_EQ(put(R"({"current_time": 1})"), 400);
    EXPECT_EQ(put(R"({"current_time": 1, "duration_slots": 1, "curve_mode": "none", "alpha": 2})"), 400);
    EXPECT_EQ(put(R"({"current_time": 1, "duration_slots": 1, "curve_mode": "none", "alpha": 0, "focal": "hippo"})"), 400);
    EXPECT_EQ(put(R"({"current_time": 1, "duration_slots": 1, "curve_mode": "none", "alpha": 0,
                     "selected_pair": ["lion-1", "lion-1"]})"), 400);
    EXPECT_EQ(put(R"({"current_time": 1, "duration_slots": 1, "curve_mode": "none", "alpha": 0})"), 200);
    // collection PUT takes the name from the body
    EXPECT_EQ(api.handle({"PUT", "/api/views", {}, R"({"name": "y", "current_time": 1, "duration_slots": 1,
                                                      "curve_mode": "none", "alpha": 0})"}).status, 200);
    EXPECT_EQ(api.handle({"GET", "/api/views/y", {}, ""}).status, 200);
}

TEST(Views, UnwritableStoreFails) {
    EXPECT_THROW(ViewStore("/nonexistent-dir/views.json"), Error);
}

TEST(Http, RoundTripOverLoopback) {
    ViewStore store;
    Api api(synthetic(), store);
    HttpServer server(api);
    const int port = server.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread worker([&] { server.listen(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto res = client.Get("/api/meta");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(res->body, api.handle({"GET", "/api/meta", {}, ""}).body);
    EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");

    res = client.Get("/api/relatedness/pair?i=lion-1&j=lion-1");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_NE(res->body.find("self_pair"), std::string::npos);

    res = client.Put("/api/views/net",
                     R"({"current_time": 3, "duration_slots": 6, "curve_mode": "catmull-rom", "alpha": 0.5})",
                     "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    res = client.Get("/api/views/net");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);

    server.stop();
    worker.join();
}
