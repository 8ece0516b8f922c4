#include <doctest.h>

#include "nucleo/config.hpp"

using nucleo::cli::ConfigError;
using nucleo::cli::KeyValueConfig;

TEST_CASE("config parses keys, comments and blanks") {
    const auto cfg = KeyValueConfig::parse(
        "# a comment\n"
        "dataset = /data/cx93\n"
        "\n"
        "seed=17\n"
        "  seg.min_solidity =  0.88  # trailing comment\n");
    CHECK(cfg.get_string("dataset", "") == "/data/cx93");
    CHECK(cfg.get_int("seed", 0) == 17);
    CHECK(cfg.get_double("seg.min_solidity", 0.0) == doctest::Approx(0.88));
    CHECK(cfg.has("seed"));
    CHECK_FALSE(cfg.has("missing"));
}

TEST_CASE("config rejects malformed and duplicate lines") {
    CHECK_THROWS_AS(KeyValueConfig::parse("novalue\n"), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse("=5\n"), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse("a=1\na=2\n"), ConfigError);
}

TEST_CASE("config typed getters validate their input") {
    auto cfg = KeyValueConfig::parse("n=12\nx=1.5\nflag=yes\nlist=1, 2,3\nbad=12abc\n");
    CHECK(cfg.get_int("n", 0) == 12);
    CHECK(cfg.get_double("x", 0) == doctest::Approx(1.5));
    CHECK(cfg.get_bool("flag", false));
    CHECK(cfg.get_int_list("list", {}) == std::vector<int>{1, 2, 3});
    CHECK(cfg.get_int("absent", 7) == 7);
    CHECK_THROWS_AS(cfg.get_int("bad", 0), ConfigError);
    CHECK_THROWS_AS(cfg.get_double("bad", 0), ConfigError);
    CHECK_THROWS_AS(cfg.get_bool("bad", false), ConfigError);
    CHECK_THROWS_AS(cfg.require_string("absent"), ConfigError);
}

TEST_CASE("config flags unknown keys") {
    auto cfg = KeyValueConfig::parse("seed=1\nseg.min_sized=2\n");
    CHECK_THROWS_AS(cfg.reject_unknown_keys({"seed", "seg.min_size"}), ConfigError);
    CHECK_NOTHROW(cfg.reject_unknown_keys({"seed", "seg.min_sized"}));
}
