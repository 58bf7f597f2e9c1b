#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gpmix/simulation.hpp"

using Eigen::VectorXd;
using gpmix::Regime;
using gpmix::SimConfig;

TEST_CASE("main scheme produces the documented shapes") {
  SimConfig cfg;
  cfg.seed = 91;
  const auto res = gpmix::simulate_main(cfg);

  REQUIRE(res.data.size() == 50);
  for (const auto& ind : res.data.individuals) REQUIRE(ind.size() == 30);
  REQUIRE(res.truth.z.size() == 50);
  REQUIRE(res.truth.grid.size() == 200);
  REQUIRE(res.truth.m.size() == 3);
  REQUIRE(res.truth.mu.size() == 3);
  CHECK(res.truth.hp.gamma.size() == 1);  // shared under the default regime
  CHECK(res.truth.hp.theta.size() == 1);

  const auto pooled = gpmix::build_pooled_grid(res.data.individuals);
  CHECK(pooled.t.size() <= 200);
  for (Eigen::Index a = 0; a < pooled.t.size(); ++a) {
    bool found = false;
    for (Eigen::Index b = 0; b < res.truth.grid.size() && !found; ++b)
      if (pooled.t[a] == res.truth.grid[b]) found = true;
    CHECK(found);
  }

  for (int z : res.truth.z) {
    CHECK(z >= 0);
    CHECK(z < 3);
  }

  // kernel draws are uniform on the linear scale: variance in [1, e^3],
  // length-scale in [1, e]
  for (const auto& kp : {res.truth.hp.gamma[0], res.truth.hp.theta[0]}) {
    const double variance = std::exp(2.0 * kp.log_v);
    const double scale = std::exp(kp.log_l);
    CHECK(variance >= 1.0);
    CHECK(variance <= std::exp(3.0));
    CHECK(scale >= 1.0);
    CHECK(scale <= std::exp(1.0));
  }
}

TEST_CASE("per-individual kernel draws follow the regime") {
  SimConfig cfg;
  cfg.seed = 92;
  cfg.M = 7;
  cfg.N_pool = 25;
  cfg.N_i = 6;
  cfg.K_true = 2;
  cfg.regime = Regime::Hki;
  const auto res = gpmix::simulate_main(cfg);
  CHECK(res.truth.hp.gamma.size() == 2);
  CHECK(res.truth.hp.theta.size() == 7);
  CHECK(res.truth.hp.noise.size() == 7);
}

TEST_CASE("fixed seeds reproduce bit-identical datasets") {
  SimConfig cfg;
  cfg.seed = 93;
  cfg.M = 6;
  cfg.N_pool = 30;
  cfg.N_i = 8;
  const auto a = gpmix::simulate_main(cfg);
  const auto b = gpmix::simulate_main(cfg);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    CHECK((a.data.individuals[i].t - b.data.individuals[i].t).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a.data.individuals[i].y - b.data.individuals[i].y).lpNorm<Eigen::Infinity>() == 0.0);
  }
  CHECK(a.truth.z == b.truth.z);

  SimConfig other = cfg;
  other.seed = 94;
  const auto c = gpmix::simulate_main(other);
  CHECK((a.data.individuals[0].y - c.data.individuals[0].y).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("a single generating cluster labels everyone identically") {
  SimConfig cfg;
  cfg.seed = 95;
  cfg.M = 9;
  cfg.K_true = 1;
  cfg.N_pool = 20;
  cfg.N_i = 5;
  const auto res = gpmix::simulate_main(cfg);
  for (int z : res.truth.z) CHECK(z == 0);
}

TEST_CASE("marginal variance agrees with the drawn kernel parameters") {
  // one standardized residual per seed keeps the draws independent
  double sum_sq = 0.0;
  const int n_seeds = 200;
  for (int s = 0; s < n_seeds; ++s) {
    SimConfig cfg;
    cfg.seed = 1000 + static_cast<std::uint64_t>(s);
    cfg.M = 1;
    cfg.K_true = 1;
    cfg.N_pool = 12;
    cfg.N_i = 3;
    const auto res = gpmix::simulate_main(cfg);
    const auto& ind = res.data.individuals[0];
    const auto idx = gpmix::resolve_timestamps(res.truth.grid, ind.t, 1e-12);
    const double m0 = res.truth.m[0][idx[0]];
    const double var = std::exp(2.0 * res.truth.hp.gamma[0].log_v) +
                       std::exp(2.0 * res.truth.hp.theta[0].log_v) +
                       std::exp(res.truth.hp.noise[0].log_sigma2);
    const double z = (ind.y[0] - m0) / std::sqrt(var);
    sum_sq += z * z;
  }
  const double mean_sq = sum_sq / n_seeds;
  CHECK(std::abs(mean_sq - 1.0) <= 3.0 * std::sqrt(2.0 / n_seeds));
}

TEST_CASE("four-group scheme matches its closed-form curve") {
  CHECK(gpmix::scheme_a_curve(0.0, 0.5, 2.5, 2.5) == 1.25);
  CHECK(gpmix::scheme_a_curve(0.3, 1.0, 7.5, 7.5) == Catch::Approx(0.3 + 0.7 * 2.5));
  CHECK(gpmix::scheme_a_curve(0.8, 0.5, 2.5, 9.0) == 0.8);   // outside the tent
  CHECK(gpmix::scheme_a_curve(0.8, 1.0, 7.5, 0.1) == 0.8);   // outside the tent
  CHECK(gpmix::scheme_a_curve(1.0, 0.5, 2.5, 2.5) == 1.0);   // U=1 flattens the bump
}

TEST_CASE("four-group scheme produces a common grid and plausible values") {
  const auto res = gpmix::simulate_scheme_a(77);
  REQUIRE(res.data.size() == 50);
  REQUIRE(res.truth.grid.size() == 30);
  std::set<int> groups;
  for (std::size_t i = 0; i < res.data.size(); ++i) {
    const auto& ind = res.data.individuals[i];
    REQUIRE(ind.size() == 30);
    CHECK((ind.t - res.truth.grid).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(ind.y.minCoeff() > -1.5);
    CHECK(ind.y.maxCoeff() < 5.0);
    groups.insert(res.truth.z[i]);
    CHECK(res.truth.z[i] >= 0);
    CHECK(res.truth.z[i] <= 3);

    const auto [c, d] = gpmix::kSchemeAGroups[static_cast<std::size_t>(res.truth.z[i])];
    for (int a = 0; a < 30; ++a)
      CHECK(res.truth.curves[i][a] ==
            gpmix::scheme_a_curve(res.truth.u[static_cast<Eigen::Index>(i)], c, d,
                                  res.truth.grid[a]));
  }
  CHECK(groups.size() >= 2);

  // every curve of a group shares the group's level draw
  std::map<int, double> group_level;
  for (std::size_t i = 0; i < res.data.size(); ++i) {
    const auto [it, fresh] =
        group_level.emplace(res.truth.z[i], res.truth.u[static_cast<Eigen::Index>(i)]);
    if (!fresh) CHECK(res.truth.u[static_cast<Eigen::Index>(i)] == it->second);
  }

  const auto redo = gpmix::simulate_scheme_a(77);
  CHECK((redo.data.individuals[13].y - res.data.individuals[13].y).lpNorm<Eigen::Infinity>() ==
        0.0);
}

TEST_CASE("prefix split keeps chronology and recovers the original") {
  VectorXd t(5), y(5);
  t << 0.0, 1.0, 2.0, 3.0, 4.0;
  y << 5.0, 6.0, 7.0, 8.0, 9.0;
  const auto ind = gpmix::make_individual("x", t, y);

  const auto [obs, test] = gpmix::split_new_individual(ind, 3);
  REQUIRE(obs.size() == 3);
  REQUIRE(test.size() == 2);
  CHECK(obs.t[2] == 2.0);
  CHECK(test.t[0] == 3.0);
  VectorXd tcat(5), ycat(5);
  tcat << obs.t, test.t;
  ycat << obs.y, test.y;
  CHECK((tcat - t).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((ycat - y).lpNorm<Eigen::Infinity>() == 0.0);

  const auto [o2, t2] = gpmix::split_new_individual(ind, 4);
  CHECK(t2.size() == 1);
  CHECK_THROWS_AS(gpmix::split_new_individual(ind, 5), std::invalid_argument);
  CHECK_THROWS_AS(gpmix::split_new_individual(ind, 0), std::invalid_argument);
}
