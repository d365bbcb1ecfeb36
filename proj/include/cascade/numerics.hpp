#pragma once

#include <cstdint>
#include <functional>
#include <random>

namespace cascade {

// Root of f on [a,b] by Brent's method. Requires f(a), f(b) of opposite sign.
// Converges to |x - x*| <= xtol + 4*eps*|x|.
double brent_root(const std::function<double(double)>& f, double a, double b,
                  double xtol = 1e-14, int max_iter = 200);

// Minimizer of f on [a,b] by Brent's parabolic/golden method.
double brent_minimize(const std::function<double(double)>& f, double a, double b,
                      double xtol = 1e-10, int max_iter = 200);

// Inverse of erf on (-1,1): rational initial guess polished by Newton on std::erf.
// Accurate to ~1e-15 relative away from the endpoints.
double erf_inv(double y);

// Adaptive Gauss7/Kronrod15 panel integration of f over [a,b].
// Splits the worst panel until the summed Kronrod error estimate is below
// abs_tol, throws QuadratureFailure if max_panels is exhausted first.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_panels = 4000);

// splitmix64 step, used to decorrelate seeds and derive substreams.
std::uint64_t splitmix64(std::uint64_t& state);

// Mixes (seed, stream) into one well-spread 64-bit seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Standard-normal generator with an explicit engine and hand-rolled Box-Muller,
// so the bit stream does not depend on the letter of the standard library.
class NormalRng {
 public:
  explicit NormalRng(std::uint64_t seed) : eng_(seed) {}
  NormalRng(std::uint64_t seed, std::uint64_t stream) : eng_(mix_seed(seed, stream)) {}

  double uniform();  // in (0,1)
  double normal();

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cascade
