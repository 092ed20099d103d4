#pragma once

#include <functional>
#include <vector>

namespace mrh {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Hermite rule transformed to the standard normal weight:
//   E[f(Z)] ~ sum_i w_i f(z_i),  Z ~ N(0,1),  sum_i w_i = 1.
QuadratureRule gauss_hermite_normal(int n);

// Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

// Composite integrator for int f(z) phi(z) dz over [-z_max, z_max] where
// phi is the standard normal density.  The integration range is split at the
// supplied breakpoints (locations where f has a kink or jump) and each smooth
// segment is covered by Gauss-Legendre panels of bounded width, so piecewise
// smooth integrands (indicators, hinge payoffs) integrate to near machine
// precision instead of the slow node-mass convergence a plain Hermite rule
// exhibits on discontinuities.
class NormalSegmentQuad {
  public:
    explicit NormalSegmentQuad(double z_max = 8.5, double panel_width = 0.5, int panel_nodes = 12);

    double integrate(const std::function<double(double)>& f) const;
    double integrate(const std::function<double(double)>& f, const std::vector<double>& breaks) const;

    double z_max() const { return z_max_; }

  private:
    double z_max_;
    double panel_width_;
    QuadratureRule gl_;
};

}  // namespace mrh
