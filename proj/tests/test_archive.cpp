#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "relmove/archive.hpp"

using namespace relmove;

TEST(Archive, RoundTripsEverySlot) {
    std::mt19937_64 rng(21);
    auto data = relmove::testing::random_dataset(rng, 5, 40);
    data.origin = {-24.1234567, 31.7654321};
    const auto back = archive_from_json(nlohmann::json::parse(archive_to_json(data).dump()));
    EXPECT_EQ(back.grid, data.grid);
    EXPECT_EQ(back.arena.M, data.arena.M);
    EXPECT_EQ(back.arena.min_x, data.arena.min_x);
    EXPECT_EQ(back.origin.lat, data.origin.lat);
    ASSERT_EQ(back.tracks.size(), data.tracks.size());
    for (const auto& [id, t] : data.tracks) {
        const auto& b = back.track(id);
        EXPECT_EQ(b.slots, t.slots);
        EXPECT_EQ(b.species, t.species);
        EXPECT_EQ(b.first_valid, t.first_valid);
        EXPECT_EQ(b.last_valid, t.last_valid);
    }
}

TEST(Archive, FileRoundTrip) {
    std::mt19937_64 rng(22);
    const auto data = relmove::testing::random_dataset(rng, 2, 10);
    std::filesystem::create_directories(RELMOVE_TEST_TMP);
    const std::string path = std::string(RELMOVE_TEST_TMP) + "/archive_roundtrip.json";
    save_archive(data, path);
    EXPECT_EQ(load_archive(path).track("a1").slots, data.track("a1").slots);
    EXPECT_THROW(load_archive(std::string(RELMOVE_TEST_TMP) + "/does_not_exist.json"), Error);
}

TEST(Archive, RejectsMalformedDocuments) {
    std::mt19937_64 rng(23);
    const auto good = archive_to_json(relmove::testing::random_dataset(rng, 2, 4));

    auto wrong_version = good;
    wrong_version["version"] = 99;
    EXPECT_THROW(archive_from_json(wrong_version), Error);

    auto short_states = good;
    short_states["tracks"][0]["states"] = "MM";
    EXPECT_THROW(archive_from_json(short_states), Error);

    auto bad_tag = good;
    bad_tag["tracks"][0]["states"] = "MXMM";
    EXPECT_THROW(archive_from_json(bad_tag), Error);

    EXPECT_THROW(archive_from_json(nlohmann::json::array()), Error);
}
