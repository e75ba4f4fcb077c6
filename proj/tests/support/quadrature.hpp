#pragma once

#include <cmath>
#include <functional>

namespace gnnx::testing {

// Adaptive Simpson integration of a smooth function on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-14,
                        int depth = 50) {
  std::function<double(double, double, double, double, double, double, double, int)> step =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
    return step(lo, mid, flo, flm, fmid, left, eps / 2.0, d - 1) + step(mid, hi, fmid, frm, fhi, right, eps / 2.0, d - 1);
  };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return step(a, b, fa, fm, fb, whole, tol, depth);
}

// KL(Bern(p) || Bern(q)) as the integral of its derivative in p,
// logit(t) - logit(q), from q to p (the divergence vanishes at p = q).
inline double bernoulli_kl_by_quadrature(double p, double q) {
  const double lq = std::log(q / (1.0 - q));
  return integrate([&](double t) { return std::log(t / (1.0 - t)) - lq; }, q, p);
}

}  // namespace gnnx::testing
