#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "mhdbl/fixtures.hpp"
#include "mhdbl/grid.hpp"
#include "mhdbl/solver.hpp"

namespace mhdbl::testing {

inline DomainConfig domain_2d(int nx, int nz, double zmax, double stretch = 1.0) {
  DomainConfig d;
  d.dim = 2;
  d.Lx = 2.0 * std::numbers::pi;
  d.Nx = nx;
  d.Nz = nz;
  d.Zmax = zmax;
  d.stretch = stretch;
  return d;
}

using fixtures::small_data_domain;
using fixtures::small_data_state;

// Hand-rolled generator for smooth random test fields: a few tangential modes
// with random amplitudes and decaying normal profiles.
class FieldGenerator {
public:
  explicit FieldGenerator(std::uint64_t seed) : rng_(seed) {}

  Field smooth(const GridPtr& grid, int max_mode = 3, bool wall_zero = false) {
    std::uniform_real_distribution<double> amp(-1.0, 1.0), rate(0.5, 2.0), phase(0.0, 2.0 * std::numbers::pi);
    struct Term {
      int mx, my;
      double a, r, ph;
    };
    std::vector<Term> terms;
    std::uniform_int_distribution<int> mode(0, max_mode);
    for (int i = 0; i < 4; ++i)
      terms.push_back({mode(rng_), grid->dim() == 3 ? mode(rng_) : 0, amp(rng_), rate(rng_), phase(rng_)});
    return sample(grid, [&](double x, double y, double z) {
      double v = 0.0;
      for (const auto& t : terms) {
        const double prof = wall_zero ? z * std::exp(-t.r * z) : std::exp(-t.r * z * z);
        v += t.a * std::cos(t.mx * x + t.my * y + t.ph) * prof;
      }
      return v;
    });
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::mt19937_64& engine() { return rng_; }

private:
  std::mt19937_64 rng_;
};

}  // namespace mhdbl::testing
