#include "fountain/quadrature.hpp"

#include <array>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include "fountain/errors.hpp"

namespace fountain {
namespace {

// Abscissae of the 15-point Kronrod rule on [-1, 1] (non-negative half) and
// the corresponding Kronrod and embedded 7-point Gauss weights.
constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrod = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGauss = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double lo;
  double hi;
  double value;
  double error;
  int depth;
  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel evaluate(const std::function<double(double)>& f, double lo, double hi,
               int depth) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double kronrod = fc * kKronrod[7];
  double gauss = fc * kGauss[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kNodes[static_cast<std::size_t>(j)];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrod[static_cast<std::size_t>(j)] * sum;
    if (j % 2 == 1) gauss += kGauss[static_cast<std::size_t>(j / 2)] * sum;
  }
  kronrod *= half;
  gauss *= half;
  return {lo, hi, kronrod, std::abs(kronrod - gauss), depth};
}

constexpr std::size_t kMaxPanels = 1u << 18;

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double lo,
                           double hi, const QuadratureConfig& config) {
  if (lo == hi) return {0.0, 0.0, 0};
  if (!(std::isfinite(lo) && std::isfinite(hi)))
    throw QuadratureNonConvergence("integration bounds must be finite");

  std::priority_queue<Panel> panels;
  panels.push(evaluate(f, lo, hi, 0));
  double total = panels.top().value;
  double error = panels.top().error;
  int evaluations = 15;

  while (true) {
    const double target = std::max(config.abs_tol, config.rel_tol * std::abs(total));
    // Error estimates that have collapsed to round-off are accepted.
    if (error <= target || error <= 64 * 2.2e-16 * std::abs(total)) break;
    if (!std::isfinite(total))
      throw QuadratureNonConvergence("integrand is not finite on the interval");
    Panel worst = panels.top();
    if (worst.depth >= config.max_depth || panels.size() > kMaxPanels) {
      std::ostringstream os;
      os << "error " << error << " above target " << target << " at depth "
         << config.max_depth;
      throw QuadratureNonConvergence(os.str());
    }
    panels.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    Panel left = evaluate(f, worst.lo, mid, worst.depth + 1);
    Panel right = evaluate(f, mid, worst.hi, worst.depth + 1);
    evaluations += 30;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
  }

  // Re-sum to shed the drift of incremental updates.
  double value = 0.0, err = 0.0;
  while (!panels.empty()) {
    value += panels.top().value;
    err += panels.top().error;
    panels.pop();
  }
  return {value, err, evaluations};
}

double kronrod15(const std::function<double(double)>& f, double lo, double hi) {
  if (lo == hi) return 0.0;
  return evaluate(f, lo, hi, 0).value;
}

}  // namespace fountain
