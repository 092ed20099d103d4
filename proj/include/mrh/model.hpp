#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrh/grid.hpp"
#include "mrh/quadrature.hpp"

namespace mrh {

enum class ModelKind { Bachelier, BlackScholes, Empirical };

struct SamplePoint {
    double x1 = 0.0;
    double x2 = 0.0;
};

// Nodal tables of the first-marginal density q1 and of the weight
// v_{p'} = q1 * E1[|X2 - X1|^{p'}] on the working interval I.
struct MarginalDensityTable {
    UniformGrid grid;
    std::vector<double> q1;
    std::vector<double> vp;
    double pprime = 2.0;
};

// Two-period reference law mu of (X1, X2).
//
// Analytic kinds (one-dimensional):
//   Bachelier:     X1 = sigma Z1,                 X2 = sigma (Z1 + Z2)
//   BlackScholes:  X1 = S0 exp(-sigma^2/2 + sigma Z1),
//                  X2 = S0 exp(-sigma^2 + sigma (Z1 + Z2))
// with Z1, Z2 independent standard normals; both are martingales.  The spot
// S0 only enters the Black-Scholes kind.  Empirical models carry weighted
// sample points; conditional expectations use Nadaraya-Watson regression with
// a Gaussian kernel whose bandwidth must be supplied explicitly.
//
// The working interval I = [l, r] spans the (eps_lo, 1 - eps_hi) quantiles of
// the first marginal; all grids, hedges and density tables live on I.
// Immutable after construction and safe to share across threads.
class TwoPeriodModel {
  public:
    static TwoPeriodModel bachelier(double sigma, double spot = 1.0,
                                    std::pair<double, double> trunc = {1e-3, 1e-3},
                                    std::size_t grid_nodes = 512, int quad_order = 64);
    static TwoPeriodModel black_scholes(double sigma, double spot = 1.0,
                                        std::pair<double, double> trunc = {1e-3, 1e-3},
                                        std::size_t grid_nodes = 512, int quad_order = 64);
    static TwoPeriodModel empirical(std::vector<SamplePoint> points, std::vector<double> weights,
                                    std::optional<double> bandwidth = std::nullopt,
                                    std::pair<double, double> trunc = {1e-3, 1e-3},
                                    std::size_t grid_nodes = 512);

    ModelKind kind() const { return kind_; }
    double sigma() const { return sigma_; }
    double spot() const { return spot_; }
    int quad_order() const { return quad_order_; }
    const UniformGrid& grid1() const { return grid_; }
    double interval_lo() const { return grid_.lo; }
    double interval_hi() const { return grid_.hi; }
    std::pair<double, double> truncation() const { return trunc_; }
    bool is_analytic() const { return kind_ != ModelKind::Empirical; }
    std::optional<double> bandwidth() const { return bandwidth_; }

    // n i.i.d. draws from mu; deterministic for a fixed seed.
    std::vector<SamplePoint> sample(std::size_t n, std::uint64_t seed) const;

    // E[ f(X1, X2) | X1 = x1 ] by Gauss-Hermite quadrature on the conditional
    // law (Nadaraya-Watson for empirical models).  Throws if the integrand is
    // non-finite on a quadrature node.
    double conditional_expectation(double x1, const std::function<double(double, double)>& f) const;

    // Same conditional expectation, but with the integration range split at
    // the supplied x2-kink locations and integrated by composite
    // Gauss-Legendre panels; exact workhorse for indicator-like integrands.
    double conditional_expectation_split(double x1, const std::function<double(double, double)>& f,
                                         const std::vector<double>& x2_kinks) const;

    // E1[ |X2 - x1|^{p'} ] (kink-aware).
    double conditional_abs_moment(double x1, double pprime) const;

    // First-marginal density q1 at x1.
    double marginal_density_at(double x1) const;

    // Quantile of the first marginal at probability eps in (0,1).
    double marginal_quantile(double eps) const;

    MarginalDensityTable marginal_density(double pprime) const;

    // Conditional draws of X2 given X1 = x1 (analytic kinds only).
    std::vector<double> conditional_sample(double x1, std::size_t n, std::uint64_t seed) const;

    // Maps between conditional normal coordinate z and x2 (analytic kinds).
    double x2_of_z(double x1, double z) const;
    std::optional<double> z_of_x2(double x1, double x2) const;

  private:
    TwoPeriodModel() = default;

    ModelKind kind_ = ModelKind::Bachelier;
    double sigma_ = 0.0;
    double spot_ = 1.0;
    std::pair<double, double> trunc_{1e-3, 1e-3};
    UniformGrid grid_;
    int quad_order_ = 64;
    QuadratureRule gh_;
    NormalSegmentQuad seg_{8.5, 0.5, 12};

    // empirical payload
    std::vector<SamplePoint> points_;
    std::vector<double> weights_;
    std::vector<double> cum_weights_;
    std::optional<double> bandwidth_;

    void require_bandwidth(const char* op) const;
};

}  // namespace mrh
