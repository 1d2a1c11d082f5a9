#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <sstream>

#include "cgm/environment.hpp"
#include "cgm/io.hpp"
#include "cgm/lpp.hpp"
#include "cgm/rng.hpp"
#include "oracles.hpp"

using namespace cgm;

namespace {

// 3x3 grid with w(i,j) = 1 + i + 3j: rows (1,2,3), (4,5,6), (7,8,9).
Environment grid3x3() {
  Grid<double> g(3, 3);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) g(i, j) = 1 + i + 3 * j;
  return Environment::from_grid(g, Pt{0, 0});
}

Environment random_env(const WeightFamily& fam, int w, int h, std::uint64_t seed) {
  return sample_environment(fam, w, h, Pt{0, 0}, seed);
}

const std::vector<WeightFamily> kFamilies = {
    WeightFamily::exponential(1.0), WeightFamily::geometric(2.0),
    WeightFamily::bernoulli_capped(0.6, 0.0), WeightFamily::empirical({-1.5, 0.0, 0.3, 2.0, 4.0})};

}  // namespace

TEST_CASE("last passage basics") {
  const Environment env = grid3x3();
  CHECK(last_passage(env, Pt{1, 1}, Pt{1, 1}) == 0.0);
  CHECK(last_passage(env, Pt{0, 0}, Pt{1, 0}) == env.at(Pt{0, 0}));
  CHECK(last_passage(env, Pt{0, 1}, Pt{0, 2}) == env.at(Pt{0, 1}));
  CHECK_THROWS_AS(last_passage(env, Pt{1, 1}, Pt{0, 2}), std::domain_error);
}

TEST_CASE("3x3 arithmetic example: best path takes the steep column first") {
  // brute force over the 6 monotone paths gives 1+4+7+8 = 20
  const Environment env = grid3x3();
  const double brute =
      oracle::brute_last_passage([&](Pt p) { return env.at(p); }, Pt{0, 0}, Pt{2, 2});
  CHECK(brute == 20.0);
  CHECK(last_passage(env, Pt{0, 0}, Pt{2, 2}) == 20.0);
}

TEST_CASE("dp equals brute force on all rectangles up to 4x4") {
  int instance = 0;
  for (const auto& fam : kFamilies)
    for (int rep = 0; rep < 70; ++rep) {
      const Environment env = random_env(fam, 4, 4, rng::derive(1000, instance++));
      for (int w = 1; w <= 4; ++w)
        for (int h = 1; h <= 4; ++h) {
          const Pt y{w - 1, h - 1};
          const double dp = last_passage(env, Pt{0, 0}, y);
          const double bf =
              oracle::brute_last_passage([&](Pt p) { return env.at(p); }, Pt{0, 0}, y);
          REQUIRE(dp == Catch::Approx(bf).margin(1e-10));
        }
    }
}

TEST_CASE("forward table agrees with scalar dp and is superadditive") {
  for (const auto& fam : kFamilies) {
    const Environment env = random_env(fam, 12, 12, 77);
    const PassageTable t = forward_table(env, Pt{0, 0}, Pt{11, 11});
    CHECK(t.at(Pt{11, 11}) == last_passage(env, Pt{0, 0}, Pt{11, 11}));
    // G_{0,z} >= G_{0,x} + G_{x,z}
    for (int rep = 0; rep < 50; ++rep) {
      const auto u = rng::bits(5, rep, 0, rng::StreamTag::misc);
      const Pt x{std::int64_t(u % 12), std::int64_t((u >> 8) % 12)};
      const Pt z{x.x + std::int64_t((u >> 16) % (12 - x.x)), x.y + std::int64_t((u >> 24) % (12 - x.y))};
      const double g0z = last_passage(env, Pt{0, 0}, z);
      const double g0x = t.at(x);
      const double gxz = last_passage(env, x, z);
      CHECK(g0z >= g0x + gxz - 1e-10 * std::max(1.0, std::abs(g0z)));
    }
  }
}

TEST_CASE("backward table matches forward values") {
  const Environment env = random_env(WeightFamily::exponential(1.0), 10, 8, 3);
  const PassageTable back = backward_table(env, Pt{9, 7}, Pt{0, 0});
  for (int j = 0; j < 8; j += 2)
    for (int i = 0; i < 10; i += 3) {
      CHECK(back.at(Pt{i, j}) ==
            Catch::Approx(last_passage(env, Pt{i, j}, Pt{9, 7})).margin(1e-10));
    }
}

TEST_CASE("point-to-line") {
  const Environment env = grid3x3();
  SECTION("n = 0 is the empty sum") {
    const auto r = point_to_line(env, 0, Vec2{0.4, -0.3});
    CHECK(r.value == 0.0);
    CHECK(r.argmax == Pt{0, 0});
  }
  SECTION("n = 1 with zero tilt scores the origin weight") {
    const auto r = point_to_line(env, 1, Vec2{0, 0});
    CHECK(r.value == env.at(Pt{0, 0}));
  }
  SECTION("n = 2 with zero tilt, frozen from the 4-path enumeration") {
    const double brute =
        oracle::brute_point_to_line([&](Pt p) { return env.at(p); }, Pt{0, 0}, 2, Vec2{0, 0});
    CHECK(brute == 5.0);  // paths score {3, 3, 5, 5}
    const auto r = point_to_line(env, 2, Vec2{0, 0});
    CHECK(r.value == 5.0);
    CHECK(r.argmax == Pt{1, 1});  // tie with (0,2) broken toward e1
  }
  SECTION("negative level rejected") {
    CHECK_THROWS_AS(point_to_line(env, -1, Vec2{0, 0}), std::domain_error);
  }
}

TEST_CASE("point-to-line equals endpoint decomposition and brute force") {
  for (const auto& fam : kFamilies) {
    const Environment env = random_env(fam, 7, 7, 21);
    const Vec2 h{0.3, -0.2};
    const auto levels = point_to_line_levels(env, Pt{0, 0}, 6, h);
    for (int n = 0; n <= 6; ++n) {
      // max_p { G_{0,p} + h.p } over |p|_1 = n, exact
      double best = -1e300;
      for (int i = 0; i <= n; ++i) {
        const Pt p{i, n - i};
        best = std::max(best, last_passage(env, Pt{0, 0}, p) + h.dot(p));
      }
      CHECK(levels[n].value == best);
      const double brute =
          oracle::brute_point_to_line([&](Pt p) { return env.at(p); }, Pt{0, 0}, n, h);
      CHECK(levels[n].value == Catch::Approx(brute).margin(1e-10));
    }
  }
}

TEST_CASE("growth cluster") {
  SECTION("origin not yet joined") {
    const Environment env = grid3x3();
    CHECK(growth_cluster(env, 0.5).empty());
  }
  SECTION("all-ones weights at t = 2.5") {
    const Environment env =
        sample_environment(WeightFamily::bernoulli_capped(1.0, 0.0), 6, 6, Pt{0, 0}, 2);
    const auto c = growth_cluster(env, 2.5);
    REQUIRE(c.size() == 3);
    CHECK(c[0] == Pt{0, 0});
    CHECK(c[1] == Pt{1, 0});
    CHECK(c[2] == Pt{0, 1});
  }
  SECTION("nested in t and a down-set") {
    const Environment env = random_env(WeightFamily::exponential(1.0), 8, 8, 9);
    const auto small = growth_cluster(env, 3.0);
    const auto big = growth_cluster(env, 7.0);
    for (const Pt& p : small) CHECK(std::find(big.begin(), big.end(), p) != big.end());
    for (const Pt& p : big) {
      if (p.x > 0) CHECK(std::find(big.begin(), big.end(), p - e1) != big.end());
      if (p.y > 0) CHECK(std::find(big.begin(), big.end(), p - e2) != big.end());
    }
  }
  SECTION("negative families rejected") {
    const Environment env = random_env(WeightFamily::empirical({-1.0, 2.0}), 4, 4, 1);
    CHECK_THROWS_AS(growth_cluster(env, 1.0), std::domain_error);
  }
}

namespace {

NeBoundary random_boundary(std::size_t n, std::uint64_t seed, double mean_h, double mean_v) {
  NeBoundary b;
  for (std::size_t k = 0; k < n; ++k) {
    b.north.push_back(-mean_h * std::log1p(-rng::uniform01(seed, k, 0, rng::StreamTag::boundary_h)));
    b.east.push_back(-mean_v * std::log1p(-rng::uniform01(seed, k, 0, rng::StreamTag::boundary_v)));
  }
  return b;
}

}  // namespace

TEST_CASE("ne boundary table: rays are cumulative sums, bulk recovers the weights") {
  for (const auto& fam : kFamilies) {
    const Environment env = random_env(fam, 12, 12, 31);
    const Pt v{11, 11};
    const NeBoundary b = random_boundary(11, 13, 2.0, 2.0);
    const PassageTable t = ne_boundary_lpp(env, v, b, Pt{0, 0});

    double acc = 0;
    for (int k = 1; k <= 11; ++k) {
      acc += b.north[k - 1];
      CHECK(t.at(v - Pt{k, 0}) == acc);
    }
    acc = 0;
    for (int k = 1; k <= 11; ++k) {
      acc += b.east[k - 1];
      CHECK(t.at(v - Pt{0, k}) == acc);
    }

    // recovery: min(I, J) = w at every bulk point
    const IncrementField inc = increments(t);
    for (int j = 0; j < 11; ++j)
      for (int i = 0; i < 11; ++i) {
        const Pt x{i, j};
        const double got = std::min(inc.I_at(x), inc.J_at(x));
        CHECK(got == Catch::Approx(env.at(x)).margin(1e-10));
      }

    // unit-cell additivity of increments (1 ulp slack from the re-pairing)
    for (int j = 0; j < 10; ++j)
      for (int i = 0; i < 10; ++i) {
        const Pt x{i, j};
        CHECK(inc.I_at(x) + inc.J_at(x + e1) ==
              Catch::Approx(inc.J_at(x) + inc.I_at(x + e2)).margin(1e-10));
      }
  }
}

TEST_CASE("ne boundary table equals brute force over the combined field") {
  const Environment env = random_env(WeightFamily::exponential(1.0), 5, 5, 4);
  const Pt v{4, 4};
  const NeBoundary b = random_boundary(4, 6, 1.5, 3.0);
  const PassageTable t = ne_boundary_lpp(env, v, b, Pt{0, 0});
  const auto field = [&](Pt q) { return ne_field_weight(env, v, b, q); };
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) {
      const Pt u{i, j};
      CHECK(t.at(u) == Catch::Approx(oracle::brute_last_passage(field, u, v)).margin(1e-10));
    }
}

TEST_CASE("boundary length validation") {
  const Environment env = random_env(WeightFamily::exponential(1.0), 6, 6, 4);
  NeBoundary b = random_boundary(3, 6, 1.0, 1.0);
  CHECK_THROWS_AS(ne_boundary_lpp(env, Pt{5, 5}, b, Pt{0, 0}), std::invalid_argument);
}

TEST_CASE("restricted last step") {
  const Environment env = random_env(WeightFamily::geometric(2.0), 6, 6, 8);
  const Pt v{5, 5};
  const NeBoundary b = random_boundary(5, 10, 2.0, 2.0);
  const auto r = ne_boundary_lpp_restricted(env, v, b, Pt{0, 0});
  const PassageTable t = ne_boundary_lpp(env, v, b, Pt{0, 0});
  CHECK(std::max(r.via_e1, r.via_e2) == Catch::Approx(t.at(Pt{0, 0})).margin(1e-10));

  // brute force over both path classes on a 2x2 instance with hand-set values
  Grid<double> g(2, 2);
  g(0, 0) = 1;
  g(1, 0) = 10;
  g(0, 1) = 2;
  g(1, 1) = 3;
  const Environment small = Environment::from_grid(g, Pt{0, 0});
  NeBoundary sb;
  sb.north = {5.0, 0.5};
  sb.east = {1.0, 4.0};
  const auto rs = ne_boundary_lpp_restricted(small, Pt{1, 1}, sb, Pt{0, 0});
  const auto field = [&](Pt q) { return ne_field_weight(small, Pt{1, 1}, sb, q); };
  const double via_e1 =
      oracle::brute_last_passage(field, Pt{0, 0}, Pt{0, 1}) + field(Pt{0, 1});
  const double via_e2 =
      oracle::brute_last_passage(field, Pt{0, 0}, Pt{1, 0}) + field(Pt{1, 0});
  CHECK(rs.via_e1 == Catch::Approx(via_e1).margin(1e-12));
  CHECK(rs.via_e2 == Catch::Approx(via_e2).margin(1e-12));
}

TEST_CASE("comparison lemma on random 20x20 tables, plain and boundary-style fields") {
  // I_{x,v+e2} >= I_{x,v} >= I_{x,v+e1} and J mirrored, for arbitrary fixed
  // weights and nested sinks. 10^3 instances run in the acceptance suite; a
  // representative slice here.
  int checked = 0;
  for (int inst = 0; inst < 60; ++inst) {
    const auto& fam = kFamilies[inst % kFamilies.size()];
    Environment env = random_env(fam, 21, 21, rng::derive(500, inst));
    if (inst % 3 == 0) {
      // overwrite the top row / right column with heavier boundary-like values
      Grid<double> g(21, 21);
      for (int j = 0; j < 21; ++j)
        for (int i = 0; i < 21; ++i) g(i, j) = env.at(Pt{i, j});
      for (int i = 0; i < 21; ++i) {
        g(i, 20) = 3.0 * g(i, 20) + 1.0;
        g(20, i) = 2.5 * g(20, i) + 0.5;
      }
      env = Environment::from_grid(g, Pt{0, 0});
    }
    const Pt v{19, 19};
    const PassageTable t0 = backward_table(env, v, Pt{0, 0});
    const PassageTable t1 = backward_table(env, v + e1, Pt{0, 0});
    const PassageTable t2 = backward_table(env, v + e2, Pt{0, 0});
    for (int j = 0; j < 19; ++j)
      for (int i = 0; i < 19; ++i) {
        const Pt x{i, j};
        const double I0 = t0.at(x) - t0.at(x + e1);
        const double I1 = t1.at(x) - t1.at(x + e1);
        const double I2 = t2.at(x) - t2.at(x + e1);
        REQUIRE(I2 >= I0 - 1e-10);
        REQUIRE(I0 >= I1 - 1e-10);
        const double J0 = t0.at(x) - t0.at(x + e2);
        const double J1 = t1.at(x) - t1.at(x + e2);
        const double J2 = t2.at(x) - t2.at(x + e2);
        REQUIRE(J2 <= J0 + 1e-10);
        REQUIRE(J0 <= J1 + 1e-10);
        ++checked;
      }
  }
  CHECK(checked > 0);
}

TEST_CASE("csv export of tables and increment fields") {
  const Environment env = grid3x3();
  const PassageTable t = forward_table(env, Pt{0, 0}, Pt{2, 2});
  std::ostringstream os;
  write_csv(t, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,value");
  std::size_t rows = 0;
  std::string last;
  while (std::getline(in, line))
    if (!line.empty()) {
      ++rows;
      last = line;
    }
  CHECK(rows == 9);
  CHECK(last == "2,2,20");  // G_{0,(2,2)} on the fixed grid

  const IncrementField inc = increments(backward_table(env, Pt{2, 2}, Pt{0, 0}));
  std::ostringstream osI, osJ;
  write_csv(inc, IncrementAxis::I, osI);
  write_csv(inc, IncrementAxis::J, osJ);
  const std::string si = osI.str(), sj = osJ.str();
  CHECK(std::count(si.begin(), si.end(), '\n') == 1 + 2 * 3);
  CHECK(std::count(sj.begin(), sj.end(), '\n') == 1 + 3 * 2);
}

TEST_CASE("sw boundary table: rays are cumulative sums and match brute force") {
  // grid of Y-weights plus south/west boundary arrays
  const Environment Yenv = random_env(WeightFamily::exponential(1.0), 6, 6, 44);
  SwBoundary b;
  for (int k = 0; k < 5; ++k) {
    b.south.push_back(1.0 + 0.25 * k);
    b.west.push_back(2.0 - 0.25 * k);
  }
  const Pt v{0, 0}, hi{5, 5};
  const PassageTable t = sw_boundary_lpp([&](Pt p) { return Yenv.at(p); }, v, hi, b);
  double acc = 0;
  for (int k = 1; k <= 5; ++k) {
    acc += b.south[k - 1];
    CHECK(t.at(Pt{k, 0}) == acc);
  }
  // brute force: sum over path points excluding the initial one
  const auto field = [&](Pt q) {
    if (q.y == 0 && q.x >= 1) return b.south[q.x - 1];
    if (q.x == 0 && q.y >= 1) return b.west[q.y - 1];
    return Yenv.at(q);
  };
  for (int j = 0; j <= 5; ++j)
    for (int i = 0; i <= 5; ++i) {
      const Pt x{i, j};
      CHECK(t.at(x) ==
            Catch::Approx(oracle::brute_last_passage_excl_initial(field, v, x)).margin(1e-10));
    }
}
