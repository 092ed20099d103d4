#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "mrh/criterion.hpp"
#include "mrh/fields.hpp"
#include "mrh/grid.hpp"
#include "mrh/model.hpp"
#include "mrh/report.hpp"
#include "mrh/stats.hpp"

namespace mrh {

struct EvalOptions {
    std::uint64_t seed = 42;
    std::size_t n_samples = 1'000'000;
    double p = 2.0;                 // ball exponent; dual p' = p/(p-1)
    double foc_tol = 1e-10;         // root-finder residual tolerance
    std::size_t max_bracket = 64;   // geometric bracket expansions before giving up
    bool force_root_solver = false; // use the general-p FOC solver even at p=2
};

struct ValueEstimate {
    double value = 0.0;
    double stderr_value = 0.0;
};

// Nystrom discretization of the martingale hedge integral equation
// (I - K)h = c0 + c1*k + u on the marginal grid, with kernel
// K(x,z) = 2*q1(z)*(k(x)-k(z))^+ and k(x) = \int_l^x dxi/v2(xi).
struct FredholmSystem {
    UniformGrid grid{0.0, 1.0, 2};
    std::vector<double> k;                   // shifted so k(l) = 0
    std::vector<std::vector<double>> kernel; // strictly lower triangular rows
    std::vector<double> gamma1;              // E1[(X2-x1) d1 delta]
    std::vector<double> gamma2;              // E1[(d2-d1) delta]
    std::vector<double> u;                   // u(l) = 0
    std::vector<double> q1;
    std::vector<double> v2;                  // q1(x1) * E1[(X2-x1)^2]
    std::vector<double> phi0, phi1, psi;     // (I-K)^{-1} of 1, k, u
    double c0 = 0.0, c1 = 0.0;
    double a0 = 0.0, a1 = 0.0, b0 = 0.0, b1 = 0.0;
    double det = 0.0;                        // a0*b1 - a1*b0
};

// Residual-direction data handed to the scenario generator: phi evaluates the
// first-order residual blocks at an arbitrary point, norm is its L^{p'}(mu)
// size on the cached sample, per_block picks the blockwise (adapted) rather
// than joint (standard) gradient of the norm when building T.
struct DirectionSpec {
    std::function<std::pair<double, double>(double, double)> phi;
    double norm = 0.0;
    double pprime = 2.0;
    bool per_block = true;
};

// Caches one MC sample, per-sample gradients and grid conditional fields for a
// fixed (criterion, model, options) so that every constraint set is evaluated
// on identical noise.
class SensitivityEngine {
  public:
    SensitivityEngine(Criterion criterion, TwoPeriodModel model, EvalOptions opts = {});

    // the criterion context (and direction_spec closures) point into members
    SensitivityEngine(const SensitivityEngine&) = delete;
    SensitivityEngine& operator=(const SensitivityEngine&) = delete;

    const CriterionContext& ctx() const { return ctx_; }
    const TwoPeriodModel& model() const { return ctx_.model(); }
    const ConditionalFields& fields() const { return fields_; }
    const EvalOptions& options() const { return opts_; }
    double pprime() const { return pprime_; }
    const std::vector<SamplePoint>& sample() const { return sample_; }
    const std::vector<double>& grad1() const { return g1_; }
    const std::vector<double>& grad2() const { return g2_; }

    // MC estimate of the criterion value g(mu) (stopping rule frozen at mu).
    MeanEstimate criterion_value() const;

    // adapted metric --------------------------------------------------------
    SensitivityReport adapted_unconstrained() const;
    HedgeFunction adapted_martingale_hedge() const;
    SensitivityReport adapted_martingale() const;
    SensitivityReport adapted_marginal() const;
    SensitivityReport adapted_martingale_marginal() const;

    // standard metric -------------------------------------------------------
    SensitivityReport wasserstein_unconstrained() const;
    double evaluate_U_M(const HedgeFunction& h) const;
    // minimizes U^M(h)^2 over piecewise-linear h on a uniform grid (p=2 only)
    std::pair<HedgeFunction, double> direct_minimize(std::size_t grid_nodes,
                                                     bool* ridge_used = nullptr) const;
    SensitivityReport wasserstein_martingale() const;

    FredholmSystem build_fredholm() const;
    std::pair<HedgeFunction, double> solve_fredholm(FredholmSystem& sys) const;

    // dispatch + scenario support -------------------------------------------
    SensitivityReport report_for(Constraint c, Metric m) const;
    DirectionSpec direction_spec(Constraint c, Metric m) const;

    // L^{p'}(mu) pair norm of per-sample blocks with delta-method stderr.
    ValueEstimate pair_norm(const std::vector<double>& phi1,
                            const std::vector<double>& phi2) const;

    // nodal FOC residual of the adapted martingale equation in L^2(mu1):
    // s(A-h) - E1[s(g2+h)] with s(y) = sign(y)|y|^{p'-1}.
    double adapted_M_foc_residual(const HedgeFunction& h) const;
    // nodal residual of E1[s(g2+h)] = 0 (martingale+marginal hedge).
    double adapted_Mm1_foc_residual(const HedgeFunction& h) const;
    // Euclidean norm of the normal-equation residual of the U^M quadratic.
    double direct_normal_residual(const HedgeFunction& h) const;

    // Assembled normal equations of the U^M quadratic on `grid` (symmetric
    // tridiagonal: diagonal, subdiagonal, negated gradient); diagnostic
    // surface for the symmetry/positive-semidefiniteness invariants.
    void assemble_normal_system(const UniformGrid& grid, std::vector<double>& diag,
                                std::vector<double>& off, std::vector<double>& rhs) const;

  private:
    struct Hedges {
        bool has_h = false, has_f = false;
        HedgeFunction h, f;
        double foc_residual = 0.0;
        bool ridge_used = false;
    };

    Criterion criterion_;
    TwoPeriodModel model_;
    CriterionContext ctx_; // bound to criterion_/model_; keep declaration order
    EvalOptions opts_;
    double pprime_;
    ConditionalFields fields_;
    std::vector<SamplePoint> sample_;
    std::vector<double> g1_, g2_; // per-sample gradient of delta (frozen tau)

    double s_pow(double y) const; // sign(y)|y|^{p'-1}
    double cond_s_expectation(double x1, double h) const;
    double solve_node_foc(double x1, double a, double start, bool with_a,
                          std::size_t node_index) const;
    Hedges resolve_hedges(Constraint c, Metric m) const;
    HedgeFunction nodal_hedge(const std::vector<double>& values) const;
};

// sup-norm residual of the integro-differential hedge equation
//   h' v2 + q1*gamma1 - c1 - \int_l^{x} (gamma2 + 2h) q1 = 0
// over interior nodes, with the free constant c1 chosen to minimize the sup.
double fredholm_residual(const HedgeFunction& h, const FredholmSystem& sys);

// weighted L^2(mu1) norm of nodal values (trapezoid weights times q1).
double l2_mu1_norm(const UniformGrid& grid, const std::vector<double>& q1,
                   const std::vector<double>& values);

}  // namespace mrh
