#pragma once

#include <span>
#include <string>

namespace kbound {

enum class Loss { absolute, hinge, squared, linear };

// Config-facing names: "absolute" | "hinge" | "squared" | "linear".
Loss parse_loss(const std::string& name);
const char* loss_name(Loss loss);

// True for the losses admitted by the general soft-regularization lower
// bound (it requires a non-negative loss); the linear loss is the documented
// exception and is excluded from those checks.
inline bool loss_nonnegative(Loss loss) { return loss != Loss::linear; }

// Scalar loss value. Hinge labels must be exactly -1 or +1.
double eval_loss(Loss loss, double u, double y);

// Unique minimizer of  l(u, y) + a * u^2  for a > 0, by closed form:
//   squared:  y / (1 + a)
//   absolute: y when |y| <= 1/(2a), else sign(y)/(2a)
//   hinge:    y when a <= 1/2, else y/(2a)        (y in {-1,+1})
//   linear:   -y / (2a)
// Ties at the branch boundaries coincide, and we return y there.
double u_star(Loss loss, double y, double a);

struct GapBound {
  double grid;      // (1/60) lambda d min_p max_y (2 u1* - u2*)^2 on the p-grid
  double analytic;  // closed-form value of the same expression, see below
};

// Evaluates the soft-regularization gap lower bound
//   (1/60) * lambda * d * min_{p in [1/2,2]} max_{y in ys} (2 u1* - u2*)^2
// with u1* = u_star(loss, y, p*lambda*d) and u2* = u_star(loss, y, p*lambda*d/2),
// over a uniform p-grid (grid minimum is an upper estimate of the true
// minimum). The analytic value is the exact corollary closed form:
//   linear:   0
//   squared:  max over ys at p = 2 (the expression is decreasing in p)
//   hinge:    piecewise in lambda*d (requires ys subset of {-1,+1})
//   absolute: 1/(960 lambda d), the value when the per-p optimal label
//             y = 1/(2 p lambda d) is available; independent of ys.
GapBound theorem2_gap_bound(Loss loss, double lambda, int d, std::span<const double> ys,
                            int p_grid = 513);

}  // namespace kbound
