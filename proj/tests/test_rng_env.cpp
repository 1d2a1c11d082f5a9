#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "cgm/environment.hpp"
#include "cgm/rng.hpp"
#include "cgm/stats.hpp"
#include "cgm/weights.hpp"

using namespace cgm;

TEST_CASE("family parameter validation") {
  CHECK_THROWS_AS(WeightFamily::geometric(1.0), std::invalid_argument);
  CHECK_THROWS_AS(WeightFamily::geometric(0.5), std::invalid_argument);
  CHECK_THROWS_AS(WeightFamily::exponential(0.0), std::invalid_argument);
  CHECK_THROWS_AS(WeightFamily::exponential(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(WeightFamily::bernoulli_capped(0.0), std::invalid_argument);
  CHECK_THROWS_AS(WeightFamily::bernoulli_capped(0.5, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(WeightFamily::empirical({}), std::invalid_argument);
  CHECK_THROWS_AS(sample_environment(WeightFamily::exponential(1), 0, 3, Pt{0, 0}, 1),
                  std::invalid_argument);
}

TEST_CASE("family moments") {
  const auto g = WeightFamily::geometric(2.0);
  CHECK(g.variance == 2.0);
  CHECK(g.lower_bound == 1.0);
  const auto b = WeightFamily::bernoulli_capped(0.9, 0.0);
  CHECK(b.mean == Catch::Approx(0.9));
  CHECK(b.variance == Catch::Approx(0.09));
  const auto e = WeightFamily::empirical({1.0, 2.0, 3.0});
  CHECK(e.mean == Catch::Approx(2.0));
  CHECK(e.lower_bound == 1.0);
}

TEST_CASE("regeneration is bit-identical") {
  const auto fam = WeightFamily::exponential(1.0);
  const Environment a = sample_environment(fam, 7, 5, Pt{-2, 3}, 99);
  const Environment b = sample_environment(fam, 7, 5, Pt{-2, 3}, 99);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 7; ++i) {
      const Pt p = Pt{-2, 3} + Pt{i, j};
      CHECK(a.at(p) == b.at(p));
    }
}

TEST_CASE("overlapping windows of the same seed agree cell-for-cell") {
  const auto fam = WeightFamily::geometric(3.0);
  const Environment small = sample_environment(fam, 5, 5, Pt{1, 1}, 7);
  const Environment big = sample_environment(fam, 8, 8, Pt{1, 1}, 7);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) CHECK(small.at(Pt{1 + i, 1 + j}) == big.at(Pt{1 + i, 1 + j}));
}

TEST_CASE("degenerate bernoulli gives the all-ones grid") {
  const Environment env =
      sample_environment(WeightFamily::bernoulli_capped(1.0, 0.0), 3, 3, Pt{0, 0}, 12345);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) CHECK(env.at(Pt{i, j}) == 1.0);
}

TEST_CASE("translate") {
  const auto fam = WeightFamily::exponential(2.0);
  const Environment env = sample_environment(fam, 9, 9, Pt{0, 0}, 5);

  SECTION("zero shift is the identity") {
    const Environment t = translate(env, Pt{0, 0});
    for (int j = 0; j < 9; ++j)
      for (int i = 0; i < 9; ++i) CHECK(t.at(Pt{i, j}) == env.at(Pt{i, j}));
  }
  SECTION("reads the shifted field") {
    const Pt z{2, 3};
    const Environment t = translate(env, z);
    CHECK(t.at(Pt{0, 0}) == env.at(z));
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) CHECK(t.at(Pt{i, j}) == env.at(Pt{i, j} + z));
  }
  SECTION("group law") {
    const Pt a{1, 2}, b{3, 1};
    const Environment lhs = translate(translate(env, a), b);
    const Environment rhs = translate(env, a + b);
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) CHECK(lhs.at(Pt{i, j}) == rhs.at(Pt{i, j}));
  }
}

TEST_CASE("sample mean of 1e6 exponential cells within 5 standard errors") {
  const Environment env = sample_environment(WeightFamily::exponential(1.0), 1000, 1000, Pt{0, 0}, 11);
  double s = 0;
  for (int j = 0; j < 1000; ++j)
    for (int i = 0; i < 1000; ++i) s += env.at(Pt{i, j});
  const double mean = s / 1e6;
  CHECK(std::abs(mean - 1.0) < 5.0 * 1e-3);  // SE = sigma / 1000 = 1/1000
}

TEST_CASE("moments of 1e5 draws within 5 standard errors, all families") {
  const std::vector<WeightFamily> fams = {
      WeightFamily::exponential(1.5), WeightFamily::geometric(2.5),
      WeightFamily::bernoulli_capped(0.7, -0.5), WeightFamily::empirical({-1, 0, 2, 2, 5})};
  const int N = 100000;
  for (const auto& fam : fams) {
    std::vector<double> xs(N);
    for (int i = 0; i < N; ++i) xs[i] = fam.at(17, i, 0);
    const double m = stats::mean(xs);
    const double v = stats::sample_variance(xs);
    const double se_m = std::sqrt(fam.variance / N);
    INFO(family_name(fam.kind));
    CHECK(std::abs(m - fam.mean) < 5 * se_m);
    // moment-based standard error for the sample variance
    double m4 = 0;
    for (double x : xs) m4 += std::pow(x - m, 4);
    m4 /= N;
    const double se_v = std::sqrt(std::max(m4 - v * v, 1e-12) / N);
    CHECK(std::abs(v - fam.variance) < 5 * se_v);
  }
}

TEST_CASE("geometric tail law P(w > k) = (1-1/m)^k") {
  const double m = 2.0;
  const auto fam = WeightFamily::geometric(m);
  const int N = 100000;
  std::vector<double> xs(N);
  for (int i = 0; i < N; ++i) xs[i] = fam.at(23, i, 0);
  for (int k = 0; k <= 10; ++k) {
    double cnt = 0;
    for (double x : xs)
      if (x > k) cnt += 1;
    const double p_hat = cnt / N;
    const double p = std::pow(1 - 1 / m, k);
    CHECK(std::abs(p_hat - p) < stats::binomial_ci_half(p, N, 5.0));
  }
}

TEST_CASE("geometric draws are integer-valued with support >= 1") {
  const auto fam = WeightFamily::geometric(4.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = fam.at(3, i, 7);
    CHECK(v >= 1.0);
    CHECK(v == std::floor(v));
  }
}

TEST_CASE("counter rng basic sanity") {
  // distinct tags and coordinates decorrelate
  CHECK(rng::bits(1, 0, 0, rng::StreamTag::weights) != rng::bits(1, 0, 0, rng::StreamTag::arrivals));
  CHECK(rng::bits(1, 0, 0, rng::StreamTag::weights) != rng::bits(1, 1, 0, rng::StreamTag::weights));
  CHECK(rng::bits(1, 0, 0, rng::StreamTag::weights) != rng::bits(2, 0, 0, rng::StreamTag::weights));
  CHECK(rng::derive(1, 0) != rng::derive(1, 1));
  // uniforms land in [0,1)
  for (int i = 0; i < 100; ++i) {
    const double u = rng::uniform01(42, i, -i, rng::StreamTag::misc);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
