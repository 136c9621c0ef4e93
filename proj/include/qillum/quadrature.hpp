#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace qillum {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;       // accumulated error estimate
  bool converged = false;
  std::size_t evaluations = 0;
};

namespace detail {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1] (QUADPACK dqk15).
inline constexpr double kGk15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
inline constexpr double kKronrodW[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kGauss7W[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <class F>
void gk15(const F& f, double a, double b, double& kronrod, double& err,
          double& resabs) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double fv[15];
  fv[7] = f(mid);
  double resk = kKronrodW[7] * fv[7];
  double resg = kGauss7W[3] * fv[7];
  double rabs = kKronrodW[7] * std::fabs(fv[7]);
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kGk15Nodes[i];
    fv[i] = f(mid - dx);
    fv[14 - i] = f(mid + dx);
    const double fsum = fv[i] + fv[14 - i];
    resk += kKronrodW[i] * fsum;
    rabs += kKronrodW[i] * (std::fabs(fv[i]) + std::fabs(fv[14 - i]));
    if (i % 2 == 1) resg += kGauss7W[i / 2] * fsum;
  }
  // QUADPACK-style error estimate: the raw |K - G| difference measures
  // the Gauss rule's error, which grossly overstates the Kronrod error
  // on resolved panels, so damp it by (200 e / resasc)^{3/2}.
  const double reskh = resk * 0.5;
  double resasc = kKronrodW[7] * std::fabs(fv[7] - reskh);
  for (int i = 0; i < 7; ++i)
    resasc += kKronrodW[i] *
              (std::fabs(fv[i] - reskh) + std::fabs(fv[14 - i] - reskh));
  const double ahalf = std::fabs(half);
  resasc *= ahalf;
  rabs *= ahalf;
  kronrod = resk * half;
  err = std::fabs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double eps50 = 50.0 * 2.220446049250313e-16;
  if (rabs > 1e-290) err = std::max(err, eps50 * rabs);
  resabs = rabs;
}

}  // namespace detail

/// Adaptive Gauss–Kronrod integration of f over [a, b]. Bisects the
/// interval with the largest error estimate until the total estimate
/// drops below max(abs_tol, rel_tol * |integral|) or the subdivision
/// budget is spent.
template <class F>
QuadResult integrate_gk(const F& f, double a, double b, double abs_tol,
                        double rel_tol, std::size_t max_intervals = 4000) {
  struct Seg {
    double a, b, value, error, resabs;
  };
  std::vector<Seg> segs;
  segs.reserve(64);

  QuadResult out;
  double v, e, r;
  detail::gk15(f, a, b, v, e, r);
  out.evaluations = 15;
  segs.push_back({a, b, v, e, r});

  while (true) {
    double total = 0.0, toterr = 0.0, totabs = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      total += segs[i].value;
      toterr += segs[i].error;
      totabs += segs[i].resabs;
      if (segs[i].error > segs[worst].error) worst = i;
    }
    const double roundoff = 100.0 * 2.220446049250313e-16 * totabs;
    const double goal =
        std::max({abs_tol, rel_tol * std::fabs(total), roundoff});
    if (toterr <= goal) {
      out.value = total;
      out.error = toterr;
      out.converged = true;
      return out;
    }
    if (segs.size() >= max_intervals) {
      out.value = total;
      out.error = toterr;
      out.converged = false;
      return out;
    }
    const Seg s = segs[worst];
    const double mid = 0.5 * (s.a + s.b);
    if (!(mid > s.a && mid < s.b)) {  // interval no longer splittable
      out.value = total;
      out.error = toterr;
      out.converged = toterr <= 16 * goal;
      return out;
    }
    Seg left{s.a, mid, 0, 0, 0}, right{mid, s.b, 0, 0, 0};
    detail::gk15(f, left.a, left.b, left.value, left.error, left.resabs);
    detail::gk15(f, right.a, right.b, right.value, right.error, right.resabs);
    out.evaluations += 30;
    segs[worst] = left;
    segs.push_back(right);
  }
}

}  // namespace qillum
