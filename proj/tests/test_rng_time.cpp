#include <doctest.h>

#include "txtopo/errors.hpp"
#include "txtopo/rng.hpp"
#include "txtopo/timeutil.hpp"

using namespace txtopo;

TEST_CASE("rng streams are deterministic and label-separated") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  CHECK(derive_seed(1, "alpha") != derive_seed(1, "beta"));
  CHECK(derive_seed(1, "alpha") == derive_seed(1, "alpha"));
  CHECK(derive_seed(1, "alpha", 0) != derive_seed(1, "alpha", 1));
  CHECK(derive_seed(1, "alpha") != derive_seed(2, "alpha"));
}

TEST_CASE("rng bounded draws stay in range") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.uniform_int(-3, 9);
    CHECK(v >= -3);
    CHECK(v <= 9);
    const double r = rng.uniform_real();
    CHECK(r >= 0.0);
    CHECK(r < 1.0);
  }
}

TEST_CASE("civil date round trips") {
  for (const std::int64_t days : {-1000L, -1L, 0L, 1L, 365L, 20000L, 30000L}) {
    CHECK(days_from_civil(civil_from_days(days)) == days);
  }
  CHECK(days_from_civil({1970, 1, 1}) == 0);
  CHECK(days_from_civil({2000, 3, 1}) == 11017);
}

TEST_CASE("timestamp parsing") {
  CHECK(parse_date("1970-01-01") == 0);
  CHECK(parse_date("1970-01-02") == 86400);
  CHECK(parse_timestamp("1970-01-01 00:00:01") == 1);
  CHECK(parse_timestamp("1970-01-02T01:00:00") == 86400 + 3600);
  CHECK(parse_timestamp("1970-01-02") == 86400);  // date-only gets midnight
  CHECK(!parse_date("1970-13-01").has_value());
  CHECK(!parse_date("1970-02-30").has_value());
  CHECK(!parse_time_of_day("25:00:00").has_value());
  CHECK(!parse_timestamp("garbage").has_value());

  CHECK(format_timestamp(86401) == "1970-01-02 00:00:01");
  CHECK(parse_timestamp(format_timestamp(123456789)) == 123456789);
}

TEST_CASE("duration parsing") {
  CHECK(parse_duration("7d") == 7 * 86400);
  CHECK(parse_duration("24h") == 86400);
  CHECK(parse_duration("30m") == 1800);
  CHECK(parse_duration("45s") == 45);
  CHECK(parse_duration("3600") == 3600);
  CHECK_THROWS_AS(parse_duration("0d"), DataError);
  CHECK_THROWS_AS(parse_duration("week"), DataError);
}
