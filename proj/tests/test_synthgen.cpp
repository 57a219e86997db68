#include <gtest/gtest.h>

#include <sstream>

#include "relmove/synthgen.hpp"

using namespace relmove;

namespace {

SynthConfig small_config(std::uint64_t seed = 42) {
    SynthConfig c;
    c.seed = seed;
    c.months = 2;
    c.animals = {{{"lion", Role::predator}, 2, 300.0}, {{"zebra", Role::herbivore}, 4, 350.0}};
    c.gap_rate = 0.01;
    c.mean_gap_len = 3.0;
    c.nocturnal_boost = 3.0;
    return c;
}

Dataset ingest_text(const std::string& csv) {
    std::istringstream in(csv);
    return ingest_csv(in).dataset;
}

}  // namespace

TEST(Synth, DeterministicPerSeed) {
    auto cfg = small_config();
    cfg.planted_pairings.push_back({AnimalId("zebra-1"), AnimalId("zebra-2"), 100, 300, 200});
    const auto a = generate(cfg), b = generate(cfg);
    EXPECT_EQ(a.csv, b.csv);
    EXPECT_EQ(to_json(a.truth, cfg).dump(), to_json(b.truth, cfg).dump());
    cfg.seed = 43;
    EXPECT_NE(generate(cfg).csv, a.csv);
}

TEST(Synth, ZeroGapRateInjectsNothing) {
    auto cfg = small_config();
    cfg.gap_rate = 0.0;
    const auto out = generate(cfg);
    EXPECT_TRUE(out.truth.injected_gaps.empty());
    const auto rows = std::count(out.csv.begin(), out.csv.end(), '\n') - 1;
    EXPECT_EQ(static_cast<std::size_t>(rows), cfg.slot_count() * 6);
}

TEST(Synth, FixesStayInsideTheArena) {
    auto cfg = small_config(7);
    cfg.nocturnal_boost = 10.0;  // push walkers into the walls often
    const auto out = generate(cfg);
    std::istringstream in(out.csv);
    const auto parsed = parse_fix_csv(in);
    ASSERT_TRUE(parsed.errors.empty());
    const double hw = cfg.arena_width_km * 500.0, hh = cfg.arena_height_km * 500.0;
    for (const auto& f : parsed.fixes) {
        const auto p = project(f.lat, f.lon, cfg.origin);
        EXPECT_LE(std::abs(p.x), hw + 0.01);
        EXPECT_LE(std::abs(p.y), hh + 0.01);
    }
}

TEST(Synth, InjectedGapsSurviveIngestExactly) {
    auto cfg = small_config(11);
    cfg.gap_rate = 0.02;
    const auto out = generate(cfg);
    ASSERT_FALSE(out.truth.injected_gaps.empty());
    std::istringstream in(out.csv);
    const auto result = ingest_csv(in);
    EXPECT_EQ(result.dataset.grid.slot_count, cfg.slot_count());
    std::vector<GapRecord> found;
    for (const auto& [id, track] : result.dataset.tracks) {
        for (std::size_t t = 0; t < track.slots.size(); ++t) {
            if (track.slots[t].tag == SlotTag::Unavailable) ADD_FAILURE() << id.str() << " slot " << t;
        }
        TrackSeries raw = track;
        for (auto& s : raw.slots) {
            if (s.tag == SlotTag::Interpolated) s = SlotState::unavailable();
        }
        const auto gaps = interpolate_gaps(raw).gaps;
        found.insert(found.end(), gaps.begin(), gaps.end());
    }
    EXPECT_EQ(found, out.truth.injected_gaps);
}

TEST(Synth, TetheredPairStaysClose) {
    auto cfg = small_config(5);
    cfg.planted_pairings.push_back({AnimalId("zebra-1"), AnimalId("lion-2"), 200, 400, 200});
    const auto out = generate(cfg);
    const auto data = ingest_text(out.csv);
    const auto w = windowed_mean(data, AnimalId("zebra-1"), AnimalId("lion-2"), {200, 400});
    ASSERT_TRUE(w.mean);
    EXPECT_GE(*w.mean, data.arena.M - 600.0);
    EXPECT_EQ(w.coverage, 1.0);
    ASSERT_EQ(out.truth.pairings.size(), 1u);
    EXPECT_EQ(out.truth.pairings[0].pair, canonical_pair(AnimalId("lion-2"), AnimalId("zebra-1")));
}

TEST(Synth, EncounterPhasesReported) {
    auto cfg = small_config(6);
    PlantedEncounter e;
    e.predator = AnimalId("lion-1");
    e.prey = {AnimalId("zebra-3"), AnimalId("zebra-4")};
    e.start_slot = 100;
    cfg.planted_encounter = e;
    const auto out = generate(cfg);
    ASSERT_TRUE(out.truth.encounter);
    EXPECT_EQ(out.truth.encounter->increase, (TimeWindow{100, 123}));
    EXPECT_EQ(out.truth.encounter->stable, (TimeWindow{124, 147}));
    EXPECT_EQ(out.truth.encounter->decrease, (TimeWindow{148, 171}));

    const auto data = ingest_text(out.csv);
    for (std::size_t t = 130; t <= 147; ++t) {
        const double d = *proximity(data, e.predator, e.prey.front(), static_cast<std::int64_t>(t));
        EXPECT_LT(d, e.hold_distance + e.herd_radius + 1.0);
    }
}

TEST(Synth, InvalidConfigsRejected) {
    auto self = small_config();
    self.planted_pairings.push_back({AnimalId("zebra-1"), AnimalId("zebra-1"), 0, 10, 200});
    EXPECT_THROW(generate(self), Error);

    auto unknown = small_config();
    unknown.planted_pairings.push_back({AnimalId("zebra-1"), AnimalId("hippo-1"), 0, 10, 200});
    EXPECT_THROW(generate(unknown), Error);

    auto twice = small_config();
    twice.planted_pairings.push_back({AnimalId("zebra-1"), AnimalId("zebra-2"), 0, 10, 200});
    twice.planted_pairings.push_back({AnimalId("zebra-1"), AnimalId("zebra-3"), 20, 30, 200});
    EXPECT_THROW(generate(twice), Error);

    auto outside = small_config();
    outside.planted_pairings.push_back({AnimalId("zebra-1"), AnimalId("zebra-2"), 0, 100000, 200});
    EXPECT_THROW(generate(outside), Error);

    auto rate = small_config();
    rate.gap_rate = 1.5;
    EXPECT_THROW(generate(rate), Error);

    auto empty = small_config();
    empty.animals.clear();
    EXPECT_THROW(generate(empty), Error);
}

TEST(Synth, StudyShapeCensus) {
    const auto cfg = default_paper_shape();
    EXPECT_EQ(cfg.animal_ids().size(), 25u);
    EXPECT_EQ(cfg.slot_count(), 30u * 30u * 12u);
    // a two-week slice holds about 4000 points
    EXPECT_EQ(25u * 12u * 14u, 4200u);
}

TEST(Synth, ConfigFromJson) {
    const auto c = synth_config_from_json(nlohmann::json::parse(R"({
        "seed": 9, "months": 1,
        "animals": [{"species": "lion", "count": 2}, {"species": "impala", "count": 3, "role": "herbivore", "mean_step_m": 200}],
        "planted_pairings": [{"a": "lion-1", "b": "impala-2", "start_slot": 10, "end_slot": 50}],
        "gap_rate": 0
    })"));
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.animal_ids().size(), 5u);
    EXPECT_EQ(c.animals[0].species.role, Role::predator);
    EXPECT_EQ(c.animals[1].mean_step, 200.0);
    EXPECT_EQ(c.planted_pairings.at(0).tether, 200.0);
    EXPECT_THROW(synth_config_from_json(nlohmann::json::parse(R"({"months": "x"})")), Error);
    EXPECT_THROW(synth_config_from_json(nlohmann::json::parse(R"({"planted_pairings": [{"a": "lion-1", "b": "lion-1", "start_slot": 1, "end_slot": 2}]})")), Error);
}

TEST(Synth, NightStepsAreTheTwentyOneToSixBand) {
    const Timestamp day = std::chrono::sys_days(std::chrono::year(2011) / 1 / 1);
    const Seconds step = std::chrono::hours(2);
    using std::chrono::hours;
    EXPECT_FALSE(is_night_step(day + hours(20), step));  // 18-20
    EXPECT_TRUE(is_night_step(day + hours(22), step));   // 20-22, midpoint 21
    EXPECT_TRUE(is_night_step(day + hours(30), step));   // 04-06
    EXPECT_FALSE(is_night_step(day + hours(32), step));  // 06-08
}
