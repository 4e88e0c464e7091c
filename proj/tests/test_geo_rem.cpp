#include <doctest.h>

#include <cmath>
#include <random>

#include "hvsim/geo_rem.hpp"
#include "support.hpp"

using namespace hvsim;
using hvsim::test::sample_at;

TEST_CASE("single sample builds a single cell") {
  const std::vector<MeasurementSample> s{sample_at(10, 10, -90)};
  const Rem rem = build_rem(s, 50.0);
  REQUIRE(rem.populated_cells() == 1);
  CHECK(rem.cells()[0] == GridIndex{0, 0});
  CHECK(rem.layer(Layer::rsrp).cells[0].value == -90.0);
}

TEST_CASE("two samples in one cell average") {
  const std::vector<MeasurementSample> s{sample_at(1, 1, -80), sample_at(2, 2, -90)};
  const Rem rem = build_rem(s, 50.0);
  REQUIRE(rem.populated_cells() == 1);
  CHECK(rem.lookup({3, 3})->rsrp == -85.0);
  CHECK(rem.counts()[0] == 2);
}

TEST_CASE("hand floor division places (125.3, 77.9) in cell (2,1)") {
  // (0, 0) is the bounding-box minimum, so the origin is (0, 0).
  const std::vector<MeasurementSample> s{sample_at(125.3, 77.9), sample_at(0, 0), sample_at(10, 10)};
  const Rem rem = build_rem(s, 50.0);
  CHECK(rem.origin() == Point2{0, 0});
  const std::vector<GridIndex> expected{{0, 0}, {2, 1}};
  CHECK(std::vector<GridIndex>(rem.cells().begin(), rem.cells().end()) == expected);
  CHECK(rem.index_of({125.3, 77.9}) == GridIndex{2, 1});
}

TEST_CASE("cell_id layer stores the mode with ties to the smallest id") {
  const std::vector<MeasurementSample> s{sample_at(1, 1, -90, 7), sample_at(2, 2, -90, 3), sample_at(3, 3, -90, 7),
                                         sample_at(4, 4, -90, 3), sample_at(40, 40, -90, 9)};
  const Rem rem = build_rem(s, 10.0);
  CHECK(rem.lookup({1, 1})->cell_id == 3);
}

TEST_CASE("empty map misses everywhere and the fallback refuses") {
  const Rem rem({0, 0}, 10.0);
  CHECK_FALSE(rem.lookup({5, 5}).has_value());
  CHECK_THROWS_AS(rem.lookup_detailed({5, 5}), std::logic_error);
  const std::vector<Point2> probes{{1, 1}, {100, 100}};
  CHECK(miss_ratio(rem, probes) == 1.0);
}

TEST_CASE("fallback") {
  const std::vector<MeasurementSample> s{sample_at(5, 5, -70), sample_at(25, 5, -100)};
  const Rem rem = build_rem(s, 10.0);  // origin (5,5); cells (0,0) and (2,0)

  SUBCASE("hit equals lookup") {
    const auto hit = rem.lookup_detailed({6, 6});
    CHECK_FALSE(hit.miss);
    CHECK(hit.features == *rem.lookup({6, 6}));
  }
  SUBCASE("equidistant query goes to the smaller index") {
    // Centers at (10, 10) and (30, 10); (20, 10) is in empty cell (1, 0).
    const auto r = rem.lookup_detailed({20, 10});
    CHECK(r.miss);
    CHECK(r.cell == GridIndex{0, 0});
    CHECK(r.features.rsrp == -70.0);
  }
  SUBCASE("far query picks the nearest center") {
    CHECK(rem.lookup_with_fallback({500, 0}).rsrp == -100.0);
  }
}

TEST_CASE("single populated cell serves any far position") {
  const std::vector<MeasurementSample> s{sample_at(0, 0, -77)};
  const Rem rem = build_rem(s, 25.0);
  CHECK(rem.lookup_with_fallback({-1e4, 3e4}).rsrp == -77.0);
}

TEST_CASE("lookup equals the brute-force oracle") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto samples = test::random_samples(300, seed, 600.0);
    for (double c : {7.5, 25.0, 100.0}) {
      const Rem rem = build_rem(samples, c);
      const test::BruteForceRem oracle(samples, c);
      std::mt19937_64 rng(seed * 31);
      std::uniform_real_distribution<double> d(-50.0, 650.0);
      for (int q = 0; q < 300; ++q) {
        const double x = d(rng), y = d(rng);
        const auto got = rem.lookup({x, y});
        const auto want = oracle.lookup(x, y);
        REQUIRE(got.has_value() == want.has_value());
        if (got) REQUIRE(*got == *want);
      }
    }
  }
}

TEST_CASE("dyadic widths give non-increasing miss ratios") {
  const auto samples = test::random_samples(200, 9, 800.0);
  std::vector<Point2> probes;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(0.0, 800.0);
  for (int k = 0; k < 2000; ++k) probes.push_back({d(rng), d(rng)});
  double prev = 1.0;
  for (double c : {10.0, 20.0, 40.0, 80.0, 160.0}) {
    const double r = miss_ratio(build_rem(samples, c), probes);
    CHECK(r <= prev);
    prev = r;
  }
}

TEST_CASE("miss ratio is zero when every probe is a training position") {
  const auto samples = test::random_samples(50, 5);
  std::vector<Point2> probes;
  for (const auto& s : samples) probes.push_back(s.position);
  CHECK(miss_ratio(build_rem(samples, 10.0), probes) == 0.0);
}

TEST_CASE("shifting all positions by a dyadic offset shifts the map") {
  // Dyadic rationals keep the subtraction exact, so cell indices are identical.
  std::vector<MeasurementSample> a, b;
  for (int k = 0; k < 64; ++k) {
    const double x = 0.25 * (k * 37 % 101), y = 0.5 * (k * 53 % 89);
    a.push_back(sample_at(x, y, -60.0 - k));
    b.push_back(sample_at(x + 1024.0, y - 512.0, -60.0 - k));
  }
  const Rem ra = build_rem(a, 4.0), rb = build_rem(b, 4.0);
  CHECK(rb.origin() == ra.origin() + Point2{1024.0, -512.0});
  CHECK(std::equal(ra.cells().begin(), ra.cells().end(), rb.cells().begin(), rb.cells().end()));
  CHECK(ra.layer(Layer::rsrp).cells.size() == rb.layer(Layer::rsrp).cells.size());
}

TEST_CASE("layer lookup error") {
  SUBCASE("self lookup with one sample per cell is exact") {
    const auto samples = test::random_samples(40, 8);
    const Rem rem = build_rem(samples, 1e-3);
    REQUIRE(rem.populated_cells() == samples.size());
    const auto e = layer_lookup_error(rem, samples, Layer::rsrp);
    CHECK(e.rmse == 0.0);
    CHECK(e.mae == 0.0);
    CHECK(cell_id_mismatch_rate(rem, samples) == 0.0);
  }
  SUBCASE("two samples against their mean") {
    const std::vector<MeasurementSample> s{sample_at(1, 1, -80), sample_at(2, 2, -90)};
    const auto e = layer_lookup_error(build_rem(s, 50.0), s, Layer::rsrp);
    CHECK(e.mae == doctest::Approx(5.0));
    CHECK(e.rmse == doctest::Approx(5.0));
  }
  SUBCASE("cell_id has its own metric") {
    const std::vector<MeasurementSample> s{sample_at(1, 1)};
    CHECK_THROWS_AS(layer_lookup_error(build_rem(s, 5.0), s, Layer::cell_id), std::invalid_argument);
  }
}

TEST_CASE("very coarse cells lose spatial detail on the synthetic field") {
  const auto samples = test::small_campaign(20, 3);
  std::vector<MeasurementSample> train, hold;
  for (std::size_t k = 0; k < samples.size(); ++k) (k % 5 == 0 ? hold : train).push_back(samples[k]);
  const double fine = layer_lookup_error(build_rem(train, 25.0), hold, Layer::rsrp).rmse;
  const double coarse = layer_lookup_error(build_rem(train, 400.0), hold, Layer::rsrp).rmse;
  CHECK(coarse > fine);
}

TEST_CASE("invalid input") {
  const std::vector<MeasurementSample> none;
  CHECK_THROWS_AS(build_rem(none, 10.0), std::invalid_argument);
  auto bad = sample_at(1, 1);
  bad.position.x = std::nan("");
  const std::vector<MeasurementSample> mixed{bad, sample_at(2, 2)};
  const Rem rem = build_rem(mixed, 10.0);
  CHECK(rem.rejected_samples() == 1);
  CHECK(rem.populated_cells() == 1);
  const std::vector<MeasurementSample> only_bad{bad};
  CHECK_THROWS_AS(build_rem(only_bad, 10.0), std::invalid_argument);
  const std::vector<MeasurementSample> one{sample_at(1, 1)};
  CHECK_THROWS_AS(build_rem(one, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_rem(one, -1.0), std::invalid_argument);
}

TEST_CASE("JSON round trip preserves lookups") {
  const auto samples = test::random_samples(100, 12);
  const Rem rem = build_rem(samples, 30.0);
  const Rem back = rem_from_json(nlohmann::json::parse(to_json(rem).dump()));
  CHECK(back.origin() == rem.origin());
  CHECK(back.cell_width() == rem.cell_width());
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(-100.0, 1100.0);
  for (int q = 0; q < 200; ++q) {
    const Point2 p{d(rng), d(rng)};
    CHECK(back.lookup_detailed(p).features == rem.lookup_detailed(p).features);
  }
}

TEST_CASE("layer names") {
  for (Layer l : kAllLayers) CHECK(parse_layer(layer_name(l)) == l);
  CHECK_THROWS_AS(parse_layer("snr"), std::invalid_argument);
}
