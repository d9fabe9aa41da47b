#include "kbound/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kbound {

Loss parse_loss(const std::string& name) {
  if (name == "absolute") return Loss::absolute;
  if (name == "hinge") return Loss::hinge;
  if (name == "squared") return Loss::squared;
  if (name == "linear") return Loss::linear;
  throw std::invalid_argument("unknown loss: " + name);
}

const char* loss_name(Loss loss) {
  switch (loss) {
    case Loss::absolute: return "absolute";
    case Loss::hinge: return "hinge";
    case Loss::squared: return "squared";
    case Loss::linear: return "linear";
  }
  return "?";
}

static void check_hinge_label(double y) {
  if (y != 1.0 && y != -1.0)
    throw std::invalid_argument("hinge loss requires labels in {-1,+1}");
}

double eval_loss(Loss loss, double u, double y) {
  switch (loss) {
    case Loss::absolute: return std::abs(u - y);
    case Loss::hinge:
      check_hinge_label(y);
      return std::max(0.0, 1.0 - u * y);
    case Loss::squared: return (u - y) * (u - y);
    case Loss::linear: return y * u;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double u_star(Loss loss, double y, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("u_star requires a > 0");
  switch (loss) {
    case Loss::squared: return y / (1.0 + a);
    case Loss::absolute: {
      const double kink = 1.0 / (2.0 * a);
      if (std::abs(y) <= kink) return y;
      return (y > 0.0 ? kink : -kink);
    }
    case Loss::hinge:
      check_hinge_label(y);
      if (a <= 0.5) return y;
      return y / (2.0 * a);
    case Loss::linear: return -y / (2.0 * a);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// (2 u1* - u2*)^2 at a given p for one label.
static double displacement_sq(Loss loss, double y, double lambda_d, double p) {
  const double a = p * lambda_d;
  const double u1 = u_star(loss, y, a);
  const double u2 = u_star(loss, y, a / 2.0);
  const double diff = 2.0 * u1 - u2;
  return diff * diff;
}

static double analytic_value(Loss loss, double lambda, int d, std::span<const double> ys) {
  const double ld = lambda * static_cast<double>(d);
  switch (loss) {
    case Loss::linear:
      return 0.0;
    case Loss::absolute:
      // with y = 1/(2 p lambda d) both minimizers sit on the kink, giving
      // (u1*)^2 = (1/(2 p lambda d))^2, minimized over p at p = 2
      return 1.0 / (960.0 * ld);
    case Loss::squared: {
      // decreasing in p, so the min is at p = 2 (a = 2 lambda d)
      double best = 0.0;
      for (double y : ys) {
        const double v = y / ((1.0 + 2.0 * ld) * (1.0 + ld));
        best = std::max(best, v * v);
      }
      return (1.0 / 60.0) * ld * best;
    }
    case Loss::hinge: {
      for (double y : ys) check_hinge_label(y);
      // By symmetry only |y| = 1 matters. With a = p lambda d in
      // [lambda d / 2, 2 lambda d]:
      //   a <= 1/2        -> 2*1 - 1   = 1
      //   1/2 < a <= 1    -> 2/(2a) - 1 = 1/a - 1   (decreasing)
      //   a > 1           -> 1/a - 1/a = 0
      // so the min over p sits at a_max = 2 lambda d.
      const double a_max = 2.0 * ld;
      double h;
      if (a_max <= 0.5) h = 1.0;
      else if (a_max <= 1.0) h = 1.0 / a_max - 1.0;
      else h = 0.0;
      return (1.0 / 60.0) * ld * h * h;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

GapBound theorem2_gap_bound(Loss loss, double lambda, int d, std::span<const double> ys,
                            int p_grid) {
  if (!(lambda > 0.0) || d < 1) throw std::invalid_argument("theorem2_gap_bound: need lambda > 0, d >= 1");
  if (ys.empty()) throw std::invalid_argument("theorem2_gap_bound: empty label set");
  if (p_grid < 2) throw std::invalid_argument("theorem2_gap_bound: p_grid too small");

  const double ld = lambda * static_cast<double>(d);
  double min_over_p = std::numeric_limits<double>::infinity();
  for (int k = 0; k < p_grid; ++k) {
    const double p = 0.5 + 1.5 * static_cast<double>(k) / static_cast<double>(p_grid - 1);
    double max_over_y = 0.0;
    for (double y : ys) max_over_y = std::max(max_over_y, displacement_sq(loss, y, ld, p));
    min_over_p = std::min(min_over_p, max_over_y);
  }

  GapBound out;
  out.grid = (1.0 / 60.0) * ld * min_over_p;
  out.analytic = analytic_value(loss, lambda, d, ys);
  return out;
}

}  // namespace kbound
