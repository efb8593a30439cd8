#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "polembed/quantize.hpp"

using namespace polembed;

namespace {

// scalar-state oracle over an analytic action density
class AnalyticOracle final : public PolicyOracle {
 public:
  explicit AnalyticOracle(std::function<double(double, double)> d) : d_(std::move(d)) {}
  double density(double s, double a) const override { return d_(s, a); }
  double sample(double, RandomEngine&) const override {
    throw std::logic_error("AnalyticOracle: sampling not used here");
  }

 private:
  std::function<double(double, double)> d_;
};

std::vector<double> stratified(int n, const std::function<double(double)>& quantile) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = quantile((i + 0.5) / n);
  return v;
}

}  // namespace

TEST_CASE("empirical cdf and quantile follow the inf definition") {
  EmpiricalCdf cdf({1, 2, 3, 4, 5, 6, 7, 8});
  REQUIRE(cdf.cdf(2.0) == Catch::Approx(0.25));
  REQUIRE(cdf.cdf(4.0) == Catch::Approx(0.5));
  REQUIRE(cdf.cdf(0.5) == 0.0);
  REQUIRE(cdf.cdf(8.0) == 1.0);
  REQUIRE(cdf.quantile(0.25) == 2.0);
  REQUIRE(cdf.quantile(0.5) == 4.0);
  REQUIRE(cdf.quantile(0.75) == 6.0);
  REQUIRE(cdf.quantile(1.0) == 8.0);
  // inf rule with ties: the smallest x whose cdf reaches p
  EmpiricalCdf tied({1, 1, 1, 5});
  REQUIRE(tied.quantile(0.5) == 1.0);
  REQUIRE(tied.quantile(0.80) == 5.0);
}

TEST_CASE("quantile bins on {1..8} with b = 4") {
  const BinEdges e = fit_quantile_bins({1, 2, 3, 4, 5, 6, 7, 8}, 4);
  REQUIRE(e.edges == std::vector<double>({1, 2, 4, 6, 8}));
}

TEST_CASE("b = 1 gives the sample range") {
  const BinEdges e = fit_quantile_bins({3.0, -1.0, 2.0}, 1);
  REQUIRE(e.edges == std::vector<double>({-1.0, 3.0}));
}

TEST_CASE("quantile binning errors") {
  REQUIRE_THROWS_AS(fit_quantile_bins({1, 2, 3}, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(fit_quantile_bins({1, 1, 1, 1}, 2), std::invalid_argument);
  // enough distinct values, but ties collapse an interior edge
  REQUIRE_THROWS_AS(fit_quantile_bins({1, 1, 1, 2, 3, 4}, 3), std::invalid_argument);
}

TEST_CASE("edges are increasing, cover the samples, and balance the counts") {
  RandomEngine rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 200 + rng.uniform_int(800);
    const int b = 2 + rng.uniform_int(10);
    std::vector<double> samples(n);
    for (auto& v : samples) v = rng.normal(0.0, 3.0);
    const BinEdges e = fit_quantile_bins(samples, b);
    for (int i = 0; i < b; ++i) REQUIRE(e.edges[i] < e.edges[i + 1]);
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    REQUIRE(e.edges.front() == *mn);
    REQUIRE(e.edges.back() == *mx);
    std::vector<int> counts(b, 0);
    for (double v : samples) ++counts[e.locate(v)];
    for (int i = 0; i < b; ++i) {
      REQUIRE(counts[i] >= n / b - 1);
      REQUIRE(counts[i] <= (n + b - 1) / b + 1);
    }
  }
}

TEST_CASE("four-Gaussian mixture: bins cluster near the modes") {
  RandomEngine rng(4);
  const double mu[4] = {-3.0, -1.0, 1.0, 3.0};
  std::vector<double> samples;
  for (int i = 0; i < 4000; ++i) samples.push_back(rng.normal(mu[i % 4], std::sqrt(0.3)));
  const BinEdges e = fit_quantile_bins(samples, 10);
  int widest = 0, narrowest = 0;
  for (int i = 1; i < 10; ++i) {
    if (e.width(i) > e.width(widest)) widest = i;
    if (e.width(i) < e.width(narrowest)) narrowest = i;
  }
  REQUIRE((widest == 0 || widest == 9));  // extremes hold the widest bins
  double best = 1e9;
  for (double m : mu) best = std::min(best, std::abs(e.midpoint(narrowest) - m));
  REQUIRE(best < 0.6);  // the narrowest bin sits on a mode
}

TEST_CASE("uniform samples give near-equal-width bins at 1e5 draws") {
  RandomEngine rng(12345);
  std::vector<double> samples(100000);
  for (auto& v : samples) v = rng.uniform();
  const BinEdges e = fit_quantile_bins(samples, 10);
  double mean_w = (e.hi() - e.lo()) / 10.0;
  for (int i = 0; i < 10; ++i)
    REQUIRE(std::abs(e.width(i) - mean_w) / mean_w < 0.05);
}

TEST_CASE("uniform-density oracle discretizes to uniform rows") {
  AnalyticOracle oracle([](double, double) { return 0.125; });
  const BinEdges sb({0.0, 1.0, 2.0});
  const BinEdges ab({0.0, 1.0, 2.0, 4.0});
  const DiscretizedPolicy d = discretize_policy(oracle, sb, ab);
  REQUIRE(d.uniform_rows.empty());
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 3; ++a) REQUIRE(d.policy.at(s, a) == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("standard normal action oracle matches the hand-computed row") {
  AnalyticOracle oracle([](double, double a) { return gaussian_pdf(a, 0.0, 1.0); });
  const BinEdges sb({-1.0, 1.0});
  const BinEdges ab({-3.0, -1.0, 1.0, 3.0});
  const DiscretizedPolicy d = discretize_policy(oracle, sb, ab);
  REQUIRE(d.policy.at(0, 0) == Catch::Approx(0.1065).margin(5e-5));
  REQUIRE(d.policy.at(0, 1) == Catch::Approx(0.7870).margin(5e-5));
  REQUIRE(d.policy.at(0, 2) == Catch::Approx(0.1065).margin(5e-5));
}

TEST_CASE("non-finite density names the offending cell") {
  AnalyticOracle oracle([](double s, double a) {
    if (s > 0.5 && a > 1.4) return std::nan("");
    return 1.0;
  });
  const BinEdges sb({0.0, 0.4, 1.0});
  const BinEdges ab({0.0, 1.0, 2.0});
  REQUIRE_THROWS_WITH(discretize_policy(oracle, sb, ab),
                      Catch::Matchers::ContainsSubstring("(1, 1)"));
}

TEST_CASE("all-zero density rows fall back to uniform and are flagged") {
  AnalyticOracle oracle([](double s, double) { return s < 0.5 ? 1.0 : 0.0; });
  const BinEdges sb({0.0, 0.4, 1.0});
  const BinEdges ab({0.0, 1.0, 2.0});
  const DiscretizedPolicy d = discretize_policy(oracle, sb, ab);
  REQUIRE(d.uniform_rows == std::vector<int>({1}));
  REQUIRE(d.policy.at(1, 0) == 0.5);
  REQUIRE(d.policy.at(1, 1) == 0.5);
}

TEST_CASE("discretize_policy always yields a valid lattice") {
  RandomEngine rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const double mu = rng.uniform(-1.0, 1.0);
    AnalyticOracle oracle(
        [mu](double s, double a) { return gaussian_pdf(a, mu * s, 0.5 + 0.1 * s * s); });
    std::vector<double> ssamp(500), asamp(500);
    for (auto& v : ssamp) v = rng.normal(0.0, 1.0);
    for (auto& v : asamp) v = rng.normal(0.0, 1.0);
    const BinEdges sb = fit_quantile_bins(ssamp, 6);
    const BinEdges ab = fit_quantile_bins(asamp, 5);
    REQUIRE_NOTHROW(discretize_policy(oracle, sb, ab).policy.validate());
  }
}

TEST_CASE("error volume is exactly zero for a cdf that equals its step") {
  // one bin, one sample at the left edge: the empirical cdf is the constant 1
  const EmpiricalCdf scdf({0.0});
  const std::vector<EmpiricalCdf> acdfs = {EmpiricalCdf({0.0})};
  const BinEdges sb({0.0, 1.0});
  const std::vector<BinEdges> ab = {BinEdges({0.0, 1.0})};
  REQUIRE(discretization_error_volume(scdf, acdfs, sb, ab) == 0.0);
}

TEST_CASE("error volume on the uniform distribution matches the triangle defect") {
  // stratified uniform samples; the empirical cdf is a fine staircase around
  // the linear cdf, so each bin's defect is the triangle area w/(2b)
  const int n = 20000;
  const int b = 4;
  auto unif = stratified(n, [](double p) { return p; });
  RandomEngine rng(3);
  auto paired = unif;
  for (int i = n - 1; i > 0; --i) std::swap(paired[i], paired[rng.uniform_int(i + 1)]);
  const BinEdges sb = fit_quantile_bins(unif, b);
  const ConditionalCdfs cc = build_conditional_cdfs(unif, paired, sb, b);
  const double volume =
      discretization_error_volume(cc.state_cdf, cc.action_cdfs, sb, cc.action_bins);
  // analytic: sum_i A_i sum_j B_ij with A_i = 1/32 per bin, B row-sums 1/8
  REQUIRE(volume == Catch::Approx(1.0 / 64.0).epsilon(0.1));

  // independent quadrature oracle over the same empirical objects
  double oracle_volume = 0.0;
  for (int i = 0; i < b; ++i) {
    const double lo = sb.edges[i], hi = sb.edges[i + 1];
    const double a_int =
        oracles::simpson([&](double x) { return cc.state_cdf.cdf(x); }, lo, hi, 4000);
    const double a_err = std::abs(a_int - (i + 1.0) / b * (hi - lo));
    for (int j = 0; j < b; ++j) {
      const double alo = cc.action_bins[i].edges[j], ahi = cc.action_bins[i].edges[j + 1];
      const double b_int =
          oracles::simpson([&](double x) { return cc.action_cdfs[i].cdf(x); }, alo, ahi, 4000);
      oracle_volume += a_err * std::abs(b_int - (j + 1.0) / b * (ahi - alo));
    }
  }
  REQUIRE(volume == Catch::Approx(oracle_volume).epsilon(0.02));
}

TEST_CASE("error volume decreases when b doubles on a smooth bimodal density") {
  RandomEngine rng(8);
  const int n = 20000;
  std::vector<double> s(n), a(n);
  for (int i = 0; i < n; ++i) {
    s[i] = (i % 2) ? rng.normal(-2.0, 0.7) : rng.normal(2.0, 0.7);
    a[i] = (i % 3) ? rng.normal(-2.0, 0.7) : rng.normal(2.0, 0.7);
  }
  auto volume_at = [&](int b) {
    const BinEdges sb = fit_quantile_bins(s, b);
    const ConditionalCdfs cc = build_conditional_cdfs(s, a, sb, b);
    return discretization_error_volume(cc.state_cdf, cc.action_cdfs, sb, cc.action_bins);
  };
  REQUIRE(volume_at(10) < volume_at(5));
}

TEST_CASE("error volume is nonincreasing in b on analytic densities") {
  const int n = 20000;
  const std::vector<std::function<double(double)>> quantiles = {
      [](double p) { return p; },                          // uniform
      [](double p) { return polembed::norm_ppf(p); },      // normal
      [](double p) { return -std::log1p(-p * 0.999); },    // truncated exponential
  };
  RandomEngine rng(31);
  for (const auto& q : quantiles) {
    auto samples = stratified(n, q);
    auto paired = samples;
    for (int i = n - 1; i > 0; --i) std::swap(paired[i], paired[rng.uniform_int(i + 1)]);
    double prev = std::numeric_limits<double>::infinity();
    for (int b : {2, 4, 8, 16}) {
      const BinEdges sb = fit_quantile_bins(samples, b);
      const ConditionalCdfs cc = build_conditional_cdfs(samples, paired, sb, b);
      const double v =
          discretization_error_volume(cc.state_cdf, cc.action_cdfs, sb, cc.action_bins);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= prev * (1.0 + 1e-9));
      prev = v;
    }
  }
}

TEST_CASE("error volume rejects mismatched bin counts") {
  const EmpiricalCdf scdf({0.0, 1.0});
  const std::vector<EmpiricalCdf> acdfs = {EmpiricalCdf({0.0})};
  const BinEdges sb({0.0, 0.5, 1.0});  // two state bins but one conditional cdf
  const std::vector<BinEdges> ab = {BinEdges({0.0, 1.0})};
  REQUIRE_THROWS_AS(discretization_error_volume(scdf, acdfs, sb, ab), std::invalid_argument);
}
