#include <doctest.h>

#include "rhlab/common.hpp"
#include "rhlab/config.hpp"

using namespace rhlab;
using namespace rhlab::config;

TEST_CASE("key-value parsing with units and comments") {
    const auto f = KeyValueFile::parse_string(
        "# header\n"
        "experiment = roots1d\n"
        "\n"
        "epsilon = 0.05 [rad]   # trailing comment\n"
        "trials = 1e5 [trials]\n"
        "degrees = 1, 4 16 [degrees]\n");
    REQUIRE(f.entries().size() == 4);
    CHECK(f.find("experiment")->value == "roots1d");
    CHECK(f.find("experiment")->line == 2);
    CHECK(f.find("epsilon")->unit == "rad");
    CHECK(to_double(*f.find("epsilon")) == 0.05);
    CHECK(to_integer(*f.find("trials")) == 100000);
    CHECK(to_integer_list(*f.find("degrees")) == std::vector<long long>{1, 4, 16});
    CHECK(f.find("missing") == nullptr);
}

TEST_CASE("diagnostics carry line and field") {
    try {
        KeyValueFile::parse_string("a = 1\nthis line has no equals\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 2);
    }
    const auto f = KeyValueFile::parse_string("a = 1\nb = x1\nc = 2.5\na = 3\n");
    try {
        to_double(*f.find("b"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 2);
        CHECK(e.field == "b");
    }
    CHECK_THROWS_AS(to_integer(*f.find("c")), ConfigError);
    CHECK_THROWS_AS(f.find("a"), ConfigError);
    CHECK(f.all("a").size() == 2);
    CHECK_THROWS_AS(KeyValueFile::load("/nonexistent/file.cfg"), ConfigError);
}
