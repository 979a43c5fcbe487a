#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fountain/errors.hpp"
#include "fountain/mc.hpp"
#include "fountain/posterior.hpp"
#include "fountain/special.hpp"
#include "support.hpp"

using namespace fountain;
using fountain::testing::pair;

namespace {

PosteriorDensity appendix_density() { return two_point_marginal(pair(1, 0, 3, -1), 1.0); }

}  // namespace

TEST_CASE("normal stream is reproducible and standard") {
  NormalStream a(99), b(99), c(100);
  double sum = 0, sq = 0;
  bool differs = false;
  for (int i = 0; i < 200000; ++i) {
    const double x = a.normal();
    CHECK_MESSAGE(x == b.normal(), "streams diverged");
    differs |= x != c.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(differs);
  CHECK(std::abs(sum / 200000) < 0.01);
  CHECK(std::abs(sq / 200000 - 1.0) < 0.01);
  NormalStream u(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK((v > 0.0 && v <= 1.0));
  }
}

TEST_CASE("inverse MC is deterministic and thread-count independent") {
  McConfig cfg;
  cfg.n_runs = 30000;
  cfg.seed = 12345;
  const auto r1 = inverse_mc(cfg);
  const auto r2 = inverse_mc(cfg);
  cfg.threads = 3;
  const auto r3 = inverse_mc(cfg);
  CHECK(r1.accepted_b == r2.accepted_b);
  CHECK(r1.accepted_b == r3.accepted_b);
  CHECK(r1.accepted_a == r3.accepted_a);
  CHECK(r1.histogram.counts == r3.histogram.counts);
  CHECK(r1.seed == 12345);
}

TEST_CASE("accepted runs have a negative collisional coefficient") {
  McConfig cfg;
  cfg.n_runs = 20000;
  const auto r = inverse_mc(cfg);
  REQUIRE(r.accepted_a.size() == r.accepted_b.size());
  CHECK(std::all_of(r.accepted_a.begin(), r.accepted_a.end(), [](double a) { return a < 0.0; }));
  CHECK(r.histogram.total() == r.accepted_b.size());
}

TEST_CASE("inverse MC reproduces the two-point posterior") {
  McConfig cfg;
  const auto r = inverse_mc(cfg);
  const auto cmp = compare_to_analytic(r, appendix_density());
  CHECK(cmp.ks_distance < 0.01);
  CHECK(cmp.chi2_bins >= 20);
  CHECK(cmp.chi2_p_value > 0.01);
}

TEST_CASE("result does not depend on the generating line") {
  McConfig a, b;
  b.init_a = -2.0;
  b.init_b = 5.0;
  b.seed = 2;
  const auto ra = inverse_mc(a);
  const auto rb = inverse_mc(b);
  CHECK(ks_distance_two_sample(ra.accepted_b, rb.accepted_b) < 0.015);
}

TEST_CASE("equal targets accept about half the runs with mean above y1") {
  McConfig cfg;
  cfg.y1_target = 0.0;
  cfg.y2_target = 0.0;
  const auto r = inverse_mc(cfg);
  CHECK(std::abs(r.acceptance_rate - 0.5) < 0.01);
  const double mean = std::accumulate(r.accepted_b.begin(), r.accepted_b.end(), 0.0) /
                      static_cast<double>(r.accepted_b.size());
  CHECK(mean > 0.0);
  const auto d = two_point_marginal(pair(1, 0, 3, 0), 1.0);
  CHECK(compare_to_analytic(r, d).ks_distance < 0.01);
}

TEST_CASE("KS statistic behaves as a test") {
  const auto d = appendix_density();
  const auto own = sample_from(d, 20000, 8);
  McResult r;
  r.accepted_b = own;
  r.histogram = make_histogram(own);
  CHECK(compare_to_analytic(r, d).ks_distance < 1.36 / std::sqrt(20000.0));

  // Same shape with the Gaussian factor twice as wide.
  const auto tp = two_point_parameters(pair(1, 0, 3, -1), 1.0);
  const PosteriorDensity wrong(
      "b",
      [tp](double b) {
        const double z = (b - tp.yhat) / (2 * tp.sigma_hat);
        return -0.5 * z * z + log_erfc(-(b - tp.ytilde) / (std::sqrt(2.0) * tp.sigma_tilde));
      },
      {-15, 15});
  const auto mc = inverse_mc(McConfig{});
  CHECK(ks_distance(mc.accepted_b, wrong) > 0.05);
}

TEST_CASE("KS distance shrinks with sample size") {
  const auto d = appendix_density();
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    McConfig small, large;
    small.n_runs = 1000;
    small.seed = large.seed = seed;
    large.n_runs = 100000;
    const double ks_small = ks_distance(inverse_mc(small).accepted_b, d);
    const double ks_large = ks_distance(inverse_mc(large).accepted_b, d);
    wins += ks_large < ks_small;
  }
  CHECK(wins > 10);
}

TEST_CASE("histogram binning") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0, 4.0};
  const auto h = make_histogram(x, 4);
  CHECK(h.edges.size() == 5);
  CHECK(h.counts == std::vector<std::size_t>{1, 1, 1, 2});
  CHECK(h.density(3) == doctest::Approx(0.4));
  const auto fd = make_histogram(sample_from(appendix_density(), 10000, 3));
  CHECK(fd.counts.size() > 20);
  CHECK(fd.total() == 10000);
}

TEST_CASE("configuration errors") {
  McConfig cfg;
  cfg.n_runs = 10;
  CHECK_THROWS_AS(inverse_mc(cfg), InvalidMcConfig);
  cfg = McConfig{};
  cfg.x2 = cfg.x1;
  CHECK_THROWS_AS(inverse_mc(cfg), InvalidMcConfig);
  McResult few;
  few.accepted_b = {0.1, 0.2};
  CHECK_THROWS_AS(compare_to_analytic(few, appendix_density()), TooFewSamples);
  McResult enough;
  enough.accepted_b.assign(2000, 0.0);
  enough.histogram = make_histogram(enough.accepted_b);
  CHECK_THROWS_AS(compare_to_analytic(enough, single_pair_marginal(pair(1, 0, 3, -1).low(), 1.0)),
                  ImproperDensity);
}

TEST_CASE("brute-force rejection cross-check") {
  BruteForceConfig cfg;
  const auto r = brute_force_mc(cfg);
  CHECK(r.n_runs == 1000);
  CHECK(std::all_of(r.accepted_a.begin(), r.accepted_a.end(),
                    [](double a) { return a <= 0.0 && a >= -4.0; }));
  CHECK(r.accepted_b.size() > 0);
  cfg.attempts = 5000;
  CHECK_THROWS_AS(brute_force_mc(cfg), InvalidMcConfig);
}
