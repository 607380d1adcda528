#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <set>

#include "parkipipe/common.hpp"

using namespace parkipipe;

TEST_SUITE_BEGIN("common");

TEST_CASE("seeded streams are deterministic and label-separated") {
  auto a1 = seeded_stream(42, "alpha");
  auto a2 = seeded_stream(42, "alpha");
  auto b = seeded_stream(42, "beta");
  CHECK(a1() == a2());
  CHECK(a1() != b());
  CHECK(mix_seed(1, "x", 0) != mix_seed(1, "x", 1));
  CHECK(mix_seed(1, "x") != mix_seed(2, "x"));
}

TEST_CASE("random_below stays in range and covers values") {
  auto rng = seeded_stream(7, "range");
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = random_below(rng, 7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("random_unit and random_gauss are sane") {
  auto rng = seeded_stream(7, "unit");
  double sum = 0.0, sum_sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = random_unit(rng);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double g = random_gauss(rng);
    sum += g;
    sum_sq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(sum_sq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("shuffle is deterministic per seed") {
  std::vector<int> a(20), b(20);
  for (int i = 0; i < 20; ++i) a[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)] = i;
  auto r1 = seeded_stream(5, "shuffle");
  auto r2 = seeded_stream(5, "shuffle");
  shuffle_in_place(a, r1);
  shuffle_in_place(b, r2);
  CHECK(a == b);
  std::sort(a.begin(), a.end());
  for (int i = 0; i < 20; ++i) CHECK(a[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1234567.890123, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("parallel_for touches every index once") {
  std::vector<std::atomic<int>> hits(257);
  for (auto& h : hits) h = 0;
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (const auto& h : hits) CHECK(h == 1);
}

TEST_CASE("errors carry codes") {
  try {
    fail("SignalTooShort", "nope");
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == "SignalTooShort");
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }
}

TEST_SUITE_END();
