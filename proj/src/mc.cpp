#include "fountain/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>

#include "fountain/errors.hpp"
#include "fountain/quadrature.hpp"

namespace fountain {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

NormalStream::NormalStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

double NormalStream::uniform() {
  // (0, 1]: never zero, so the logarithm below is finite.
  return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double NormalStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double phi = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

void McConfig::validate() const {
  if (n_runs < 1000) throw InvalidMcConfig("n_runs must be at least 1000");
  if (!(x2 > x1)) throw InvalidMcConfig("x2 must exceed x1");
  if (chunk_size == 0) throw InvalidMcConfig("chunk_size must be positive");
  if (bins && *bins == 0) throw InvalidMcConfig("bins must be positive");
}

std::size_t Histogram::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

double Histogram::density(std::size_t i) const {
  const double width = edges[i + 1] - edges[i];
  return static_cast<double>(counts[i]) / (static_cast<double>(total()) * width);
}

namespace {

double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, sorted.size() - 1);
  return sorted[i] + (pos - static_cast<double>(i)) * (sorted[j] - sorted[i]);
}

}  // namespace

Histogram make_histogram(std::span<const double> samples,
                         std::optional<std::size_t> bins) {
  Histogram h;
  if (samples.empty()) return h;
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  double hi = sorted.back();
  if (hi == lo) hi = lo + 1.0;

  std::size_t n_bins = 1;
  if (bins) {
    n_bins = *bins;
  } else {
    const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
    const double width =
        2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
    n_bins = width > 0 ? static_cast<std::size_t>(std::ceil((hi - lo) / width)) : 1;
    n_bins = std::clamp<std::size_t>(n_bins, 1, 10000);
  }
  h.edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i)
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
  h.counts.assign(n_bins, 0);
  const double scale = static_cast<double>(n_bins) / (hi - lo);
  for (double x : sorted) {
    auto i = static_cast<std::size_t>((x - lo) * scale);
    h.counts[std::min(i, n_bins - 1)]++;
  }
  return h;
}

McResult inverse_mc(const McConfig& config) {
  config.validate();
  const std::size_t chunks = (config.n_runs + config.chunk_size - 1) / config.chunk_size;
  const double gap = config.x2 - config.x1;
  const double delta = config.y2_target - config.y1_target;

  struct Chunk {
    std::vector<double> a;
    std::vector<double> b;
  };
  std::vector<Chunk> out(chunks);

  const auto run_chunk = [&](std::size_t c) {
    NormalStream rng(config.seed ^ splitmix64(c + 1));
    const std::size_t begin = c * config.chunk_size;
    const std::size_t end = std::min(config.n_runs, begin + config.chunk_size);
    Chunk& dst = out[c];
    for (std::size_t run = begin; run < end; ++run) {
      const double y1 = config.init_a * config.x1 + config.init_b + rng.normal();
      const double y2 = config.init_a * config.x2 + config.init_b + rng.normal();
      // Shift the simulated pair so it coincides with the target result and
      // carry the generating line along.
      const double k = y2 - y1 - delta;
      const double a = config.init_a - k / gap;
      const double b = config.init_b + k * config.x1 / gap - y1 + config.y1_target;
      if (a < 0.0) {
        dst.a.push_back(a);
        dst.b.push_back(b);
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(config.threads,
                                                           static_cast<unsigned>(chunks)));
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
      });
  }

  McResult result;
  result.seed = config.seed;
  result.n_runs = config.n_runs;
  for (auto& ch : out) {
    result.accepted_a.insert(result.accepted_a.end(), ch.a.begin(), ch.a.end());
    result.accepted_b.insert(result.accepted_b.end(), ch.b.begin(), ch.b.end());
  }
  result.acceptance_rate =
      static_cast<double>(result.accepted_b.size()) / static_cast<double>(config.n_runs);
  result.histogram = make_histogram(result.accepted_b, config.bins);
  return result;
}

double ks_distance(std::span<const double> samples, const PosteriorDensity& density) {
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  const auto pdf = [&](double t) { return density.pdf(t); };
  double d = 0.0;
  double f = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // Resynchronize with the exact CDF periodically; in between, add the
    // integral over the short gap between consecutive samples.
    if (i % 1024 == 0)
      f = density.cdf(x[i]);
    else
      f = std::clamp(f + kronrod15(pdf, x[i - 1], x[i]), 0.0, 1.0);
    const double below = static_cast<double>(i) / n;
    const double above = static_cast<double>(i + 1) / n;
    d = std::max({d, above - f, f - below});
  }
  return d;
}

double ks_distance_two_sample(std::span<const double> a, std::span<const double> b) {
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

McComparison compare_to_analytic(const McResult& result,
                                 const PosteriorDensity& density) {
  const std::size_t n = result.accepted_b.size();
  if (n < 1000)
    throw TooFewSamples("need at least 1000 accepted samples, have " + std::to_string(n));
  if (!density.proper()) density.log_norm();  // raises ImproperDensity

  McComparison cmp{};
  cmp.samples = n;
  cmp.ks_distance = ks_distance(result.accepted_b, density);

  const Histogram& h = result.histogram;
  const std::size_t bins = h.counts.size();
  const double total = static_cast<double>(n);
  std::vector<double> observed, expected;
  double obs_acc = 0.0, exp_acc = 0.0;
  double prev_cdf = 0.0;  // open-ended first bin
  for (std::size_t i = 0; i < bins; ++i) {
    const double upper = i + 1 == bins ? 1.0 : density.cdf(h.edges[i + 1]);
    obs_acc += static_cast<double>(h.counts[i]);
    exp_acc += total * (upper - prev_cdf);
    prev_cdf = upper;
    if (exp_acc >= 5.0) {
      observed.push_back(obs_acc);
      expected.push_back(exp_acc);
      obs_acc = exp_acc = 0.0;
    }
  }
  if (exp_acc > 0.0 || obs_acc > 0.0) {
    if (expected.empty()) {
      observed.push_back(obs_acc);
      expected.push_back(exp_acc);
    } else {
      observed.back() += obs_acc;
      expected.back() += exp_acc;
    }
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i)
    chi2 += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  cmp.chi2 = chi2;
  cmp.chi2_bins = static_cast<int>(observed.size());
  cmp.chi2_dof = cmp.chi2_bins - 1;
  cmp.chi2_p_value = cmp.chi2_dof > 0
                         ? boost::math::gamma_q(0.5 * cmp.chi2_dof, 0.5 * chi2)
                         : 1.0;
  return cmp;
}

std::vector<double> sample_from(const PosteriorDensity& density, std::size_t n,
                                std::uint64_t seed) {
  NormalStream rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) {
    double u = rng.uniform();
    if (u >= 1.0) u = 1.0 - 0x1.0p-53;
    x = quantile(density, u);
  }
  return out;
}

McResult brute_force_mc(const BruteForceConfig& config) {
  if (config.attempts == 0 || config.attempts > 1000)
    throw InvalidMcConfig("brute-force attempts must be in [1, 1000]");
  if (!(config.x2 > config.x1)) throw InvalidMcConfig("x2 must exceed x1");
  if (!(config.tolerance > 0.0)) throw InvalidMcConfig("tolerance must be positive");
  NormalStream rng(config.seed);
  McResult result;
  result.seed = config.seed;
  result.n_runs = config.attempts;
  for (std::size_t i = 0; i < config.attempts; ++i) {
    const double a = config.a_min * rng.uniform();
    const double b = config.b_min + (config.b_max - config.b_min) * rng.uniform();
    const double y1 = a * config.x1 + b + rng.normal();
    const double y2 = a * config.x2 + b + rng.normal();
    if (std::abs(y1 - config.y1_target) < config.tolerance &&
        std::abs(y2 - config.y2_target) < config.tolerance) {
      result.accepted_a.push_back(a);
      result.accepted_b.push_back(b);
    }
  }
  result.acceptance_rate =
      static_cast<double>(result.accepted_b.size()) / static_cast<double>(config.attempts);
  result.histogram = make_histogram(result.accepted_b);
  return result;
}

}  // namespace fountain
