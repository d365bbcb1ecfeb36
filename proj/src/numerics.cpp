#include "cascade/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cascade/errors.hpp"

namespace cascade {

double brent_root(const std::function<double(double)>& f, double a, double b,
                  double xtol, int max_iter) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw DomainError("brent_root: endpoints do not bracket a root");

  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || fb == 0.0) return b;
    if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
      d = m; e = m;  // bisection
    } else {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc, r = fb / fc;
        p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q; else p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d; d = p / q;  // accept interpolation
      } else {
        d = m; e = m;
      }
    }
    a = b; fa = fb;
    b += (std::abs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) { c = a; fc = fa; d = b - a; e = d; }
  }
  return b;
}

double brent_minimize(const std::function<double(double)>& f, double a, double b,
                      double xtol, int max_iter) {
  const double gold = 0.3819660112501051;
  double x = a + gold * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const double xm = 0.5 * (a + b);
    const double tol1 = xtol * std::abs(x) + 1e-300;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) return x;
    bool parabolic = false;
    if (std::abs(e) > tol1) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        parabolic = true;
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (xm - x >= 0.0) ? tol1 : -tol1;
      }
    }
    if (!parabolic) {
      e = (x >= xm) ? a - x : b - x;
      d = gold * e;
    }
    const double u = (std::abs(d) >= tol1) ? x + d : x + (d >= 0.0 ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; w = x; x = u;
      fv = fw; fw = fx; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; w = u; fv = fw; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return x;
}

namespace {

// Acklam's rational approximation to the standard normal quantile,
// |relative error| < 1.15e-9 on (0,1); Newton polish brings it to machine.
double norm_ppf_guess(double p) {
  static const double A[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double B[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double C[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double D[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
           ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
  }
  if (p > phigh) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
           ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
  }
  const double q = p - 0.5, r = q * q;
  return (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q /
         (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
}

}  // namespace

double erf_inv(double y) {
  if (!(y > -1.0 && y < 1.0)) throw DomainError("erf_inv: argument must lie in (-1,1)");
  if (y == 0.0) return 0.0;
  const double sqrt_pi_over_2 = 0.8862269254527580;
  double x = norm_ppf_guess(0.5 * (y + 1.0)) * 0.7071067811865476;
  // erf'(x) = 2/sqrt(pi) * exp(-x^2); three Newton steps from a 1e-9 guess.
  for (int i = 0; i < 3; ++i) {
    const double err = std::erf(x) - y;
    x -= err * sqrt_pi_over_2 * std::exp(x * x);
  }
  return x;
}

namespace {

// Kronrod-15 abscissae (nonnegative half) and weights; Gauss-7 weights on
// the odd-indexed abscissae. QUADPACK values.
const double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
const double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
const double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
};

Panel eval_panel(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = kWgk[7] * fc;
  double gauss = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kXgk[i];
    const double fs = f(c - dx) + f(c + dx);
    kron += kWgk[i] * fs;
    if (i % 2 == 1) gauss += kWg[i / 2] * fs;
  }
  kron *= h;
  gauss *= h;
  // QUADPACK scaled error estimate is overkill here; |K15-G7| is already
  // conservative for the smooth erf/exp integrands this library feeds in.
  return Panel{a, b, kron, std::abs(kron - gauss)};
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_panels) {
  if (!(abs_tol > 0.0)) throw DomainError("integrate_adaptive: abs_tol must be positive");
  if (a == b) return 0.0;
  // Sixteen seed panels so features narrower than the top-level rule spacing
  // still register a nonzero error estimate somewhere.
  constexpr int kSeedPanels = 16;
  std::vector<Panel> panels;
  panels.reserve(64);
  const double step = (b - a) / kSeedPanels;
  double lo = a;
  for (int i = 0; i < kSeedPanels; ++i) {
    const double hi = i + 1 == kSeedPanels ? b : a + (i + 1) * step;
    if (hi > lo) panels.push_back(eval_panel(f, lo, hi));
    lo = hi;
  }
  if (panels.empty()) panels.push_back(eval_panel(f, a, b));
  while (true) {
    double total_err = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      total_err += panels[i].error;
      if (panels[i].error > panels[worst].error) worst = i;
    }
    if (total_err <= abs_tol) break;
    if (static_cast<int>(panels.size()) >= max_panels)
      throw QuadratureFailure("integrate_adaptive: panel budget exhausted");
    const Panel p = panels[worst];
    const double mid = 0.5 * (p.a + p.b);
    if (mid <= p.a || mid >= p.b)
      throw QuadratureFailure("integrate_adaptive: interval underflow before tolerance");
    panels[worst] = eval_panel(f, p.a, mid);
    panels.push_back(eval_panel(f, mid, p.b));
  }
  // Sorted accumulation keeps the sum independent of the split history.
  std::sort(panels.begin(), panels.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });
  double sum = 0.0;
  for (const Panel& p : panels) sum += p.value;
  return sum;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t z = splitmix64(s);
  s = z ^ (stream * 0xDA942042E4DD58B5ull + 0x9E3779B97F4A7C15ull);
  return splitmix64(s);
}

double NormalRng::uniform() {
  // 53-bit mantissa; zero is excluded so log() below stays finite.
  while (true) {
    const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

double NormalRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

}  // namespace cascade
