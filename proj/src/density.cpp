#include "fountain/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fountain/errors.hpp"

namespace fountain {
namespace {

constexpr int kPanels = 64;
constexpr int kScanPoints = 401;
// log(1e-12): tail density relative to the peak below which a support end is
// accepted.
const double kTailLogRatio = std::log(1e-12);
constexpr int kMaxWidenings = 40;

double scan_peak(const PosteriorDensity::LogDensity& f, double lo, double hi) {
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kScanPoints; ++i) {
    const double x = lo + (hi - lo) * i / (kScanPoints - 1);
    peak = std::max(peak, f(x));
  }
  return peak;
}

Support widen(const PosteriorDensity::LogDensity& f, Support s) {
  if (!(s.lo < s.hi) || !std::isfinite(s.lo) || !std::isfinite(s.hi))
    throw QuadratureNonConvergence("support must be a finite non-empty interval");
  for (int iter = 0; iter < kMaxWidenings; ++iter) {
    const double peak = scan_peak(f, s.lo, s.hi);
    if (!std::isfinite(peak))
      throw QuadratureNonConvergence("log-density has no finite value on the support");
    const bool lo_ok = s.lo_hard || f(s.lo) - peak < kTailLogRatio;
    const bool hi_ok = s.hi_hard || f(s.hi) - peak < kTailLogRatio;
    if (lo_ok && hi_ok) return s;
    const double width = s.hi - s.lo;
    if (s.lo_hard) {
      s.hi = s.lo + 2 * width;
    } else if (s.hi_hard) {
      s.lo = s.hi - 2 * width;
    } else {
      const double mid = 0.5 * (s.lo + s.hi);
      s.lo = mid - width;
      s.hi = mid + width;
    }
  }
  throw QuadratureNonConvergence("density tails do not decay within the widened support");
}

}  // namespace

struct PosteriorDensity::State {
  std::string name;
  LogDensity log_density;
  Support support;
  QuadratureConfig quadrature;
  bool proper = true;
  double log_norm = std::numeric_limits<double>::quiet_NaN();
  double log_supremum = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> edges;
  std::vector<double> cumulative;
  std::vector<double> grid;
  std::vector<double> grid_logs;

  double pdf(double x) const {
    if (x < support.lo || x > support.hi) return 0.0;
    return std::exp(log_density(x) - log_norm);
  }

  std::size_t panel_of(double x) const {
    const double w = (support.hi - support.lo) / kPanels;
    auto j = static_cast<std::ptrdiff_t>(std::floor((x - support.lo) / w));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, kPanels - 1));
  }
};

namespace {

void fill_grid(PosteriorDensity::LogDensity const& f, Support s, int n,
               std::vector<double>& grid, std::vector<double>& logs) {
  grid.resize(static_cast<std::size_t>(n));
  logs.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = s.lo + (s.hi - s.lo) * i / (n - 1);
    grid[static_cast<std::size_t>(i)] = x;
    logs[static_cast<std::size_t>(i)] = f(x);
  }
}

}  // namespace

PosteriorDensity::PosteriorDensity(std::shared_ptr<const State> state)
    : state_(std::move(state)) {}

PosteriorDensity::PosteriorDensity(std::string name, LogDensity log_density,
                                   Support support,
                                   const QuadratureConfig& quadrature,
                                   int grid_points) {
  auto st = std::make_shared<State>();
  st->name = std::move(name);
  st->log_density = std::move(log_density);
  st->quadrature = quadrature;
  st->support = widen(st->log_density, support);
  const auto& f = st->log_density;
  const Support s = st->support;

  fill_grid(f, s, std::max(grid_points, 3), st->grid, st->grid_logs);
  const auto peak_it = std::max_element(st->grid_logs.begin(), st->grid_logs.end());
  const auto i = static_cast<std::size_t>(peak_it - st->grid_logs.begin());
  const double a = st->grid[i == 0 ? 0 : i - 1];
  const double b = st->grid[std::min(i + 1, st->grid.size() - 1)];
  const double mode = golden_section_maximize(f, a, b);
  const double log_ref = std::max(*peak_it, f(mode));
  st->log_supremum = log_ref;

  st->edges.resize(kPanels + 1);
  st->cumulative.assign(kPanels + 1, 0.0);
  for (int j = 0; j <= kPanels; ++j)
    st->edges[static_cast<std::size_t>(j)] = s.lo + (s.hi - s.lo) * j / kPanels;
  st->edges.back() = s.hi;
  const auto scaled = [&](double x) { return std::exp(f(x) - log_ref); };
  for (std::size_t j = 0; j < kPanels; ++j) {
    const double mass =
        integrate(scaled, st->edges[j], st->edges[j + 1], quadrature).value;
    st->cumulative[j + 1] = st->cumulative[j] + mass;
  }
  const double total = st->cumulative.back();
  if (!(total > 0.0) || !std::isfinite(total))
    throw QuadratureNonConvergence("density does not integrate to a positive value");
  for (auto& c : st->cumulative) c /= total;
  st->cumulative.back() = 1.0;
  st->log_norm = log_ref + std::log(total);
  state_ = std::move(st);
}

PosteriorDensity PosteriorDensity::improper(std::string name,
                                            LogDensity log_density,
                                            Support plot_range,
                                            double log_supremum,
                                            int grid_points) {
  auto st = std::make_shared<State>();
  st->name = std::move(name);
  st->log_density = std::move(log_density);
  st->support = plot_range;
  st->proper = false;
  st->log_supremum = log_supremum;
  fill_grid(st->log_density, plot_range, std::max(grid_points, 3), st->grid,
            st->grid_logs);
  return PosteriorDensity(std::move(st));
}

const std::string& PosteriorDensity::name() const { return state_->name; }
bool PosteriorDensity::proper() const { return state_->proper; }
Support PosteriorDensity::support() const { return state_->support; }
const QuadratureConfig& PosteriorDensity::quadrature() const {
  return state_->quadrature;
}

double PosteriorDensity::log_unnormalized(double x) const {
  return state_->log_density(x);
}

double PosteriorDensity::log_supremum() const { return state_->log_supremum; }

const PosteriorDensity::State& PosteriorDensity::proper_state() const {
  if (!state_->proper)
    throw ImproperDensity("density of '" + state_->name + "' is not normalizable");
  return *state_;
}

double PosteriorDensity::log_norm() const { return proper_state().log_norm; }

double PosteriorDensity::pdf(double x) const { return proper_state().pdf(x); }

double PosteriorDensity::cdf(double x) const {
  const State& st = proper_state();
  if (x <= st.support.lo) return 0.0;
  if (x >= st.support.hi) return 1.0;
  const std::size_t j = st.panel_of(x);
  const double partial =
      integrate([&](double t) { return st.pdf(t); }, st.edges[j], x, st.quadrature)
          .value;
  return std::clamp(st.cumulative[j] + partial, 0.0, 1.0);
}

double PosteriorDensity::reintegrate() const {
  const State& st = proper_state();
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < st.edges.size(); ++j)
    total += integrate([&](double t) { return st.pdf(t); }, st.edges[j],
                       st.edges[j + 1], st.quadrature)
                 .value;
  return total;
}

const std::vector<double>& PosteriorDensity::grid() const { return state_->grid; }
const std::vector<double>& PosteriorDensity::grid_log_values() const {
  return state_->grid_logs;
}

double golden_section_maximize(const std::function<double(double)>& f, double lo,
                               double hi, double x_tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > x_tol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  // The bracket ends may beat the interior when the maximum sits on a bound.
  double best = x, fbest = f(x);
  if (f(lo) > fbest) best = lo, fbest = f(lo);
  if (f(hi) > fbest) best = hi;
  return best;
}

double quantile(const PosteriorDensity& density, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("quantile probability must be in (0,1)");
  const Support s = density.support();
  // Safeguarded Newton on the CDF; the derivative is the density itself.
  double lo = s.lo, hi = s.hi;
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double g = density.cdf(x) - p;
    if (g > 0) hi = x; else lo = x;
    if (std::abs(g) < 1e-13 || hi - lo < 1e-14 * std::max(1.0, std::abs(x))) break;
    const double d = density.pdf(x);
    double next = d > 0 ? x - g / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

PosteriorSummary summarize(const PosteriorDensity& density, double interval_prob,
                           IntervalKind kind) {
  if (!density.proper())
    throw ImproperDensity("cannot summarize the improper density of '" +
                          density.name() + "'");
  if (!(interval_prob > 0.0 && interval_prob < 1.0))
    throw ConfigError("interval probability must be in (0,1)");

  const Support s = density.support();
  const QuadratureConfig& q = density.quadrature();
  const auto panel_sum = [&](const std::function<double(double)>& g) {
    double total = 0.0;
    for (int j = 0; j < kPanels; ++j) {
      const double a = s.lo + (s.hi - s.lo) * j / kPanels;
      const double b = j + 1 == kPanels ? s.hi : s.lo + (s.hi - s.lo) * (j + 1) / kPanels;
      total += integrate(g, a, b, q).value;
    }
    return total;
  };

  PosteriorSummary out{};
  out.mean = panel_sum([&](double x) { return x * density.pdf(x); });
  const double var =
      panel_sum([&](double x) { return (x - out.mean) * (x - out.mean) * density.pdf(x); });
  out.std = std::sqrt(var);

  const auto& grid = density.grid();
  const auto& logs = density.grid_log_values();
  const auto i = static_cast<std::size_t>(
      std::max_element(logs.begin(), logs.end()) - logs.begin());
  out.mode = golden_section_maximize(
      [&](double x) { return density.log_unnormalized(x); },
      grid[i == 0 ? 0 : i - 1], grid[std::min(i + 1, grid.size() - 1)]);

  if (kind == IntervalKind::central) {
    const double tail = 0.5 * (1.0 - interval_prob);
    out.interval = {quantile(density, tail), quantile(density, 1.0 - tail),
                    interval_prob};
  } else {
    // Width of [q(u), q(u+p)] is unimodal in u for unimodal densities.
    const auto neg_width = [&](double u) {
      const double a = u <= 0 ? s.lo : quantile(density, u);
      const double b = u + interval_prob >= 1 ? s.hi : quantile(density, u + interval_prob);
      return -(b - a);
    };
    const double u = golden_section_maximize(neg_width, 0.0, 1.0 - interval_prob, 1e-10);
    out.interval = {u <= 0 ? s.lo : quantile(density, u),
                    u + interval_prob >= 1 ? s.hi : quantile(density, u + interval_prob),
                    interval_prob};
  }
  return out;
}

}  // namespace fountain
