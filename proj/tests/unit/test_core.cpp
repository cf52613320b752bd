#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "equicert/common.hpp"
#include "equicert/config.hpp"
#include "equicert/csv.hpp"
#include "equicert/rng.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

using namespace equicert;

namespace {

std::string temp_path(const std::string& stem) {
    static int counter = 0;
    return (std::filesystem::temp_directory_path() /
            (stem + "_" + std::to_string(++counter) + ".tmp"))
        .string();
}

}  // namespace

TEST_CASE("rng streams are deterministic and distinct") {
    Rng a(123), b(123), c(124);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    bool any_diff = false;
    Rng a2(123);
    for (int i = 0; i < 100; ++i) any_diff = any_diff || (a2.next_u64() != c.next_u64());
    CHECK(any_diff);

    Rng s0 = Rng::stream(9, 0), s1 = Rng::stream(9, 1);
    bool stream_diff = false;
    for (int i = 0; i < 100; ++i) stream_diff = stream_diff || (s0.next_u64() != s1.next_u64());
    CHECK(stream_diff);
}

TEST_CASE("mix_u64 separates task seeds") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 20; ++a)
        for (std::uint64_t b = 0; b < 20; ++b) seen.insert(mix_u64(a, b));
    CHECK(seen.size() == 400);
}

TEST_CASE("uniform01 stays in [0,1) with a sane mean") {
    Rng rng(7);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // Mean of n uniforms has sd = 1/sqrt(12 n); allow 5 sigma.
    CHECK(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("gaussian moments match the standard normal") {
    Rng rng(11);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        s1 += g;
        s2 += g * g;
        s4 += g * g * g * g;
    }
    CHECK(std::abs(s1 / n) < 5.0 / std::sqrt(static_cast<double>(n)));
    // Var(g^2) = 2 for a standard normal.
    CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(s4 / n - 3.0) < 0.2);  // kurtosis, loose
}

TEST_CASE("discrete sampler reproduces its weights") {
    const std::vector<double> probs = {0.5, 0.25, 0.15, 0.1};
    Rng rng(3);
    std::vector<long> counts(probs.size(), 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(rng.discrete(probs))];
    for (std::size_t k = 0; k < probs.size(); ++k) {
        const double freq = static_cast<double>(counts[k]) / n;
        const double se = std::sqrt(probs[k] * (1 - probs[k]) / n);
        CHECK(std::abs(freq - probs[k]) < 5 * se);
    }
}

TEST_CASE("fmt_double round-trips exactly") {
    for (double v : {0.0, -0.0, 1.0 / 3.0, 3.141592653589793, 1e308, 5e-324,
                     -2.2250738585072014e-308, 0.1, -17.25, 123456789.123456789}) {
        const double back = parse_double(fmt_double(v));
        CHECK(std::memcmp(&back, &v, sizeof v) == 0);
    }
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(parse_double(fmt_double(inf)) == inf);
}

TEST_CASE("parsers reject junk with IoError") {
    CHECK_THROWS_AS(parse_double("x12"), IoError);
    CHECK_THROWS_AS(parse_double(""), IoError);
    CHECK_THROWS_AS(parse_double("1.2zzz"), IoError);
    CHECK_THROWS_AS(parse_long("1.5"), IoError);
    CHECK_THROWS_AS(parse_long("99999999999999999999999"), IoError);
    CHECK(parse_long("-42") == -42);
}

TEST_CASE("CsvTable round-trips through a file") {
    CsvTable t({"a", "b"});
    t.add_row({"1", fmt_double(1.0 / 3.0)});
    t.add_row({"x", "inf"});
    CHECK_THROWS(t.add_row({"too", "many", "fields"}));

    const std::string path = temp_path("csv");
    t.write(path);
    const CsvTable back = CsvTable::read(path);
    CHECK(back.header() == t.header());
    REQUIRE(back.rows().size() == 2);
    CHECK(back.rows()[0][1] == fmt_double(1.0 / 3.0));
    CHECK(back.to_text() == t.to_text());
    std::filesystem::remove(path);
}

TEST_CASE("write_text_atomic leaves exactly the content") {
    const std::string path = temp_path("atomic");
    write_text_atomic(path, "line1\nline2\n");
    std::ifstream in(path);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(all == "line1\nline2\n");
    std::filesystem::remove(path);
}

TEST_CASE("config defaults and typed getters") {
    RunConfig cfg;
    CHECK(cfg.get_str("scenario.name") == "swap-toy");
    CHECK(cfg.get_long("scenario.train_n") == 4000);
    CHECK(cfg.get_double("bound.delta") == doctest::Approx(0.05));
    CHECK(cfg.get_bool("bound.exact_empirical"));
    CHECK_FALSE(cfg.is_set("bound.delta"));
    CHECK_THROWS_AS(cfg.get_seed("run.seed"), ConfigError);  // required but unset
    CHECK_THROWS_AS(cfg.get_raw("no.such.key"), ConfigError);
    CHECK_THROWS_AS(cfg.set("no.such.key", "1"), ConfigError);
}

TEST_CASE("config parses text with comments and rejects unknown keys") {
    const RunConfig cfg = RunConfig::parse_text(
        "# comment\n"
        "run.seed = 99\n"
        "\n"
        "scenario.name=restricted-rotation  \n",
        "inline");
    CHECK(cfg.get_seed("run.seed") == 99);
    CHECK(cfg.get_str("scenario.name") == "restricted-rotation");
    CHECK(cfg.is_set("run.seed"));

    CHECK_THROWS_AS(RunConfig::parse_text("scenario.nmae=typo\n", "inline"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse_text("just a line without equals\n", "inline"), ConfigError);
}

TEST_CASE("resolved config text reproduces the configuration") {
    RunConfig cfg;
    cfg.set("run.seed", "123");
    cfg.set("sweep.n", "50,100");
    cfg.set("bound.delta", "0.1");
    const std::string text = cfg.resolved_text();
    const RunConfig back = RunConfig::parse_text(text, "resolved");
    CHECK(back.resolved_text() == text);
    CHECK(back.get_seed("run.seed") == 123);
    const auto ns = back.get_long_list("sweep.n");
    REQUIRE(ns.size() == 2);
    CHECK(ns[0] == 50);
    CHECK(ns[1] == 100);
    CHECK(back.get_list("sweep.delta").empty());
}
