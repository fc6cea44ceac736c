#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "glwb/mortality.hpp"

using namespace glwb;

#ifndef GLWB_SOURCE_DIR
#define GLWB_SOURCE_DIR "."
#endif

TEST_CASE("annuitant table basics", "[mortality]") {
    MortalityTable mt = dav2004r_65();
    CHECK(mt.entry_age() == 65);
    CHECK(mt.years() == 57);
    CHECK(mt.q().back() == 1.0);
    CHECK(mt.survival_at(0) == 1.0);
    CHECK(mt.survival_at(mt.years()) == 0.0);
    for (int k = 0; k < mt.years(); ++k)
        CHECK(mt.survival_at(k + 1) < mt.survival_at(k));
    double total = 0.0;
    for (int k = 0; k < mt.years(); ++k) total += mt.death_mass(k);
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("survival interpolation is piecewise linear", "[mortality]") {
    MortalityTable mt = gompertz_table(60, 80);
    for (int k = 0; k < mt.years(); ++k) {
        double mid = mt.survival(k + 0.5);
        CHECK(mid ==
              Catch::Approx(0.5 * (mt.survival_at(k) + mt.survival_at(k + 1)))
                  .margin(1e-14));
        CHECK(mt.density(k + 0.25) ==
              Catch::Approx(mt.death_mass(k)).margin(1e-14));
    }
    CHECK(mt.survival(double(mt.years())) == 0.0);
}

TEST_CASE("mortality stress scales deaths and keeps the terminal year",
          "[mortality]") {
    MortalityTable base = dav2004r_65();
    MortalityTable shocked = base.shock(1.10);
    REQUIRE(shocked.years() == base.years());
    for (int k = 0; k + 1 < base.years(); ++k)
        CHECK(shocked.q()[std::size_t(k)] ==
              Catch::Approx(std::min(1.0, 1.10 * base.q()[std::size_t(k)]))
                  .margin(1e-15));
    CHECK(shocked.q().back() == 1.0);
    for (int k = 1; k < base.years(); ++k)
        CHECK(shocked.survival_at(k) < base.survival_at(k));
    double total = 0.0;
    for (int k = 0; k < shocked.years(); ++k) total += shocked.death_mass(k);
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("shipped CSV matches the embedded table", "[mortality]") {
    MortalityTable embedded = dav2004r_65();
    MortalityTable csv =
        MortalityTable::from_csv(std::string(GLWB_SOURCE_DIR) +
                                 "/data/dav2004r.csv");
    REQUIRE(csv.entry_age() == embedded.entry_age());
    REQUIRE(csv.years() == embedded.years());
    for (int k = 0; k < csv.years(); ++k)
        CHECK(csv.q()[std::size_t(k)] ==
              Catch::Approx(embedded.q()[std::size_t(k)]).margin(1e-12));
}

TEST_CASE("CSV loader tolerates headers and rejects gaps", "[mortality]") {
    const std::string good = "mort_good_tmp.csv";
    {
        std::ofstream out(good);
        out << "age,qx\n# comment\n70,0.02\n71,0.03\n72,1.0\n";
    }
    MortalityTable mt = MortalityTable::from_csv(good);
    CHECK(mt.entry_age() == 70);
    CHECK(mt.years() == 3);
    CHECK(mt.q()[0] == Catch::Approx(0.02));
    std::remove(good.c_str());

    const std::string bad = "mort_bad_tmp.csv";
    {
        std::ofstream out(bad);
        out << "70,0.02\n73,0.03\n";
    }
    CHECK_THROWS(MortalityTable::from_csv(bad));
    std::remove(bad.c_str());
    CHECK_THROWS(MortalityTable::from_csv("no_such_file.csv"));
}
