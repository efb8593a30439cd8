#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "polembed/experiments.hpp"
#include "polembed/prune.hpp"
#include "polembed/simulate.hpp"

using namespace polembed;

namespace {

VisitationStats stats_from_counts(int b_S, int b_A, std::vector<std::int64_t> counts) {
  VisitationStats v;
  v.b_S = b_S;
  v.b_A = b_A;
  v.counts = std::move(counts);
  v.n_trajectories = 1;
  v.rho.assign(b_S, 0.0);
  const double total = static_cast<double>(v.total_steps());
  for (int s = 0; s < b_S; ++s) v.rho[s] = v.state_count(s) / total;
  return v;
}

}  // namespace

TEST_CASE("fully visited stats give empirical frequency rows") {
  const VisitationStats v = stats_from_counts(2, 2, {2, 2, 1, 3});
  const PrunedPolicy p = prune_policy(v, 2, 0.0);
  REQUIRE(p.pruned_fraction == 0.0);
  REQUIRE(p.visited_mask == std::vector<std::uint8_t>({1, 1}));
  REQUIRE(p.base.at(0, 0) == 0.5);
  REQUIRE(p.base.at(1, 0) == 0.25);
  REQUIRE(p.base.at(1, 1) == 0.75);
}

TEST_CASE("an unvisited state answers uniformly") {
  const VisitationStats v = stats_from_counts(3, 3, {3, 1, 0, 0, 0, 0, 1, 1, 2});
  const PrunedPolicy p = prune_policy(v, 3, 0.0);
  REQUIRE(p.visited_mask == std::vector<std::uint8_t>({1, 0, 1}));
  REQUIRE(p.pruned_fraction == Catch::Approx(1.0 / 3.0));
  for (int a = 0; a < 3; ++a) REQUIRE(p.base.at(1, a) == Catch::Approx(1.0 / 3.0));
  // the (3, 1, 0) row normalizes to (0.75, 0.25, 0)
  REQUIRE(p.base.at(0, 0) == 0.75);
  REQUIRE(p.base.at(0, 1) == 0.25);
  REQUIRE(p.base.at(0, 2) == 0.0);
}

TEST_CASE("prune_policy validates shapes and output") {
  const VisitationStats v = stats_from_counts(2, 2, {1, 1, 1, 1});
  REQUIRE_THROWS_AS(prune_policy(v, 3, 0.0), std::invalid_argument);
  RandomEngine rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const int b_S = 2 + rng.uniform_int(6);
    const int b_A = 2 + rng.uniform_int(4);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(b_S) * b_A, 0);
    for (auto& c : counts) c = rng.uniform_int(5);
    bool any = false;
    for (auto c : counts) any |= c > 0;
    if (!any) counts[0] = 1;
    const VisitationStats stats = stats_from_counts(b_S, b_A, counts);
    REQUIRE_NOTHROW(prune_policy(stats, b_A, 0.0).base.validate());
  }
}

TEST_CASE("pruning bound matches hand-evaluated values") {
  // r_max=1, gamma=0.9, |S|=10, |A|=10, delta=0.05, N=1000
  const double v = pruning_bound(1000, 1.0, 0.9, 10, 10, 0.05);
  REQUIRE(v == Catch::Approx(20.0 * std::sqrt((300.0 + 4.0 * std::log(20.0)) / 2000.0))
                   .epsilon(1e-12));
  REQUIRE(v == Catch::Approx(7.899).margin(5e-4));
  // gamma=0, |S|=|A|=1, delta=0.25, N=2 -> 2 sqrt((3 + 4 ln 4)/4)
  REQUIRE(pruning_bound(2, 1.0, 0.0, 1, 1, 0.25) ==
          Catch::Approx(2.0 * std::sqrt((3.0 + 4.0 * std::log(4.0)) / 4.0)).epsilon(1e-12));
}

TEST_CASE("pruning bound monotonicities") {
  const double base = pruning_bound(100, 1.0, 0.9, 5, 3, 0.1);
  REQUIRE(pruning_bound(200, 1.0, 0.9, 5, 3, 0.1) < base);
  REQUIRE(pruning_bound(100, 1.0, 0.95, 5, 3, 0.1) > base);
  REQUIRE(pruning_bound(100, 1.0, 0.9, 6, 3, 0.1) > base);
  REQUIRE(pruning_bound(100, 1.0, 0.9, 5, 4, 0.1) > base);
  REQUIRE(pruning_bound(100, 1.0, 0.9, 5, 3, 0.05) > base);
  double prev = std::numeric_limits<double>::infinity();
  for (std::int64_t n : {10, 100, 1000, 10000, 100000}) {
    const double b = pruning_bound(n, 1.0, 0.9, 5, 3, 0.1);
    REQUIRE(b < prev);
    prev = b;
  }
}

TEST_CASE("pruning bound rejects out-of-range arguments") {
  REQUIRE_THROWS_AS(pruning_bound(10, 1.0, 1.0, 2, 2, 0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(pruning_bound(10, 1.0, 0.9, 2, 2, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(pruning_bound(10, 1.0, 0.9, 2, 2, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(pruning_bound(0, 1.0, 0.9, 2, 2, 0.1), std::invalid_argument);
}

TEST_CASE("pruned fraction report") {
  const VisitationStats all = stats_from_counts(2, 2, {1, 1, 1, 1});
  REQUIRE(pruned_fraction_report(prune_policy(all, 2, 0.0)) == 0.0);
  VisitationStats none;
  none.b_S = 2;
  none.b_A = 2;
  none.counts = {5, 5, 0, 0};
  none.rho = {1.0, 0.0};
  none.n_trajectories = 1;
  REQUIRE(pruned_fraction_report(prune_policy(none, 2, 0.0)) == 0.5);
}

TEST_CASE("a converged pendulum policy leaves most of a broad binning unvisited") {
  // 35 bins over the full angle range; visitation counted in the converged
  // operating regime, balancing from near-upright starts
  const PendulumEnv env = make_pendulum();
  std::vector<double> se(36), ae(16);
  for (int i = 0; i <= 35; ++i) se[i] = -M_PI + 2.0 * M_PI * i / 35.0;
  for (int j = 0; j <= 15; ++j) ae[j] = -2.0 + 4.0 * j / 15.0;
  const BinEdges sb(se), ab(ae);
  const SyntheticPolicy converged = pendulum_energy_policy(0.05);
  VisitationStats v;
  v.b_S = 35;
  v.b_A = 15;
  v.counts.assign(35 * 15, 0);
  v.n_trajectories = 100;
  for (int i = 0; i < 100; ++i) {
    RandomEngine rng(mix_seed(12, i));
    State s = {rng.uniform(-0.25, 0.25), 0.0};  // converged regime: near upright
    for (int t = 0; t < env.max_episode_steps(); ++t) {
      const double a = converged.act(s, rng);
      ++v.count(sb.locate(env.feature(s)), ab.locate(a));
      s = env.step(s, a, rng).state;
    }
  }
  const double total = static_cast<double>(v.total_steps());
  v.rho.assign(35, 0.0);
  for (int s = 0; s < 35; ++s) v.rho[s] = v.state_count(s) / total;
  const PrunedPolicy pruned = prune_policy(v, 15, 0.0, &sb, &ab);
  REQUIRE(pruned.pruned_fraction > 0.0);
  REQUIRE(pruned.pruned_fraction >= 0.5);  // concentration, direction not magnitude
  REQUIRE_NOTHROW(pruned.base.validate());
}

TEST_CASE("pruning-bound certification holds on at least 1-2delta of random MDPs") {
  const auto cert = experiments::certify_pruning_bound(200, 6, 3, 0.9, 0.1, 20, 40, 2024);
  REQUIRE(cert.total == 200);
  REQUIRE(cert.coverage() >= 0.8);
}
