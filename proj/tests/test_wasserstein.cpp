#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mrh/wasserstein.hpp"

using namespace mrh;

namespace {

EvalOptions opts(std::size_t n = 200000, std::uint64_t seed = 11) {
    EvalOptions o;
    o.seed = seed;
    o.n_samples = n;
    o.p = 2.0;
    return o;
}

double hedge_l2_gap(const FredholmSystem& sys, const HedgeFunction& a, const HedgeFunction& b) {
    std::vector<double> diff(sys.grid.n), ref(sys.grid.n);
    for (std::size_t i = 0; i < sys.grid.n; ++i) {
        const double x = sys.grid.node(i);
        diff[i] = a(x) - b(x);
        ref[i] = b(x);
    }
    return l2_mu1_norm(sys.grid, sys.q1, diff) / l2_mu1_norm(sys.grid, sys.q1, ref);
}

// Sturm-style positive-definiteness check of the shifted normal matrix
// T + shift*I through the LDL^T pivots of the symmetric tridiagonal form.
bool tridiag_positive_definite(std::vector<double> diag, const std::vector<double>& off,
                               double shift) {
    double prev = diag[0] + shift;
    if (!(prev > 0.0)) return false;
    for (std::size_t i = 1; i < diag.size(); ++i) {
        const double d = diag[i] + shift - off[i - 1] * off[i - 1] / prev;
        if (!(d > 0.0)) return false;
        prev = d;
    }
    return true;
}

}  // namespace

TEST_CASE("constant payoffs collapse the whole pipeline to zero") {
    const auto crit = Criterion::constant(1.7);
    const auto model = TwoPeriodModel::bachelier(1.0, 1.0, {1e-3, 1e-3}, 64);
    const auto o = opts(20000);

    CHECK(wasserstein_unconstrained_sensitivity(crit, model, 2.0, o).value <= 1e-12);

    const HedgeFunction zero{model.grid1(), std::vector<double>(model.grid1().n, 0.0)};
    CHECK(evaluate_U_M(crit, model, zero, 2.0, o) <= 1e-12);

    auto [h, v] = direct_minimize_U_M(crit, model, 2.0, 64, o);
    CHECK(v <= 1e-12);
    for (double hv : h.values) CHECK(std::fabs(hv) <= 1e-9);

    auto sys = build_fredholm_system(crit, model, o);
    for (std::size_t i = 0; i < sys.grid.n; ++i) {
        CHECK(std::fabs(sys.gamma1[i]) <= 1e-14);
        CHECK(std::fabs(sys.gamma2[i]) <= 1e-14);
        CHECK(std::fabs(sys.u[i]) <= 1e-14);
    }
    auto [hf, vf] = solve_fredholm_hedge(sys, crit, model, o);
    for (double hv : hf.values) CHECK(std::fabs(hv) <= 1e-9);
}

TEST_CASE("bachelier unconstrained value and hedge evaluations") {
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::bachelier(1.0, 1.0, {1e-3, 1e-3}, 128);
    const auto o = opts();

    const auto none = wasserstein_unconstrained_sensitivity(crit, model, 2.0, o);
    CHECK(std::fabs(none.value - 1.0) <= 6e-3);

    // h == 0 reproduces the unconstrained value on the same sample
    const HedgeFunction zero{model.grid1(), std::vector<double>(model.grid1().n, 0.0)};
    CHECK(evaluate_U_M(crit, model, zero, 2.0, o) == doctest::Approx(none.value).epsilon(1e-12));

    // constant h = -1/2: each sample contributes exactly 1/4 + 1/4
    const HedgeFunction half{model.grid1(), std::vector<double>(model.grid1().n, -0.5)};
    CHECK(evaluate_U_M(crit, model, half, 2.0, o) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-13));
}

TEST_CASE("direct minimizer beats both reference hedges and refines monotonically") {
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::bachelier(1.0, 1.0, {1e-3, 1e-3}, 512);
    const auto o = opts();

    bool ridge = true;
    auto [h512, v512] = direct_minimize_U_M(crit, model, 2.0, 512, o, &ridge);
    CHECK_FALSE(ridge);
    CHECK(v512 < std::min(1.0, std::sqrt(0.5)));

    auto [h128, v128] = direct_minimize_U_M(crit, model, 2.0, 128, o);
    CHECK(v512 <= v128 + 1e-6);

    // nested node counts (129 -> 257 -> 513 share nodes) are nonincreasing
    double prev = 1e300;
    for (std::size_t nodes : {129u, 257u, 513u}) {
        const double v = direct_minimize_U_M(crit, model, 2.0, nodes, o).second;
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
}

TEST_CASE("fredholm system structure") {
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::black_scholes(0.4, 1.0, {1e-3, 1e-3}, 128);
    auto sys = build_fredholm_system(crit, model, opts(50000));

    CHECK(sys.k.front() == 0.0);
    CHECK(sys.u.front() == 0.0);
    for (std::size_t i = 1; i < sys.k.size(); ++i) CHECK(sys.k[i] >= sys.k[i - 1]);
    for (std::size_t i = 0; i < sys.kernel.size(); ++i) {
        for (std::size_t j = i; j < sys.kernel.size(); ++j) {
            CHECK(sys.kernel[i][j] == 0.0);
        }
    }
}

TEST_CASE("fredholm and direct hedges agree") {
    const auto crit = Criterion::forward_start();
    const auto o = opts();

    SUBCASE("black-scholes") {
        const auto model = TwoPeriodModel::black_scholes(0.4, 1.0, {1e-3, 1e-3}, 512);
        auto [hd, vd] = direct_minimize_U_M(crit, model, 2.0, 512, o);
        auto sys = build_fredholm_system(crit, model, o);
        auto [hf, vf] = solve_fredholm_hedge(sys, crit, model, o);
        CHECK(std::fabs(vd - vf) / vf <= 0.02);
        CHECK(hedge_l2_gap(sys, hd, hf) <= 0.02);
        CHECK(fredholm_residual(hf, sys) <= 1e-4);
    }

    SUBCASE("bachelier") {
        const auto model = TwoPeriodModel::bachelier(1.0, 1.0, {1e-3, 1e-3}, 512);
        auto [hd, vd] = direct_minimize_U_M(crit, model, 2.0, 512, o);
        auto sys = build_fredholm_system(crit, model, o);
        auto [hf, vf] = solve_fredholm_hedge(sys, crit, model, o);
        CHECK(std::fabs(vd - vf) / vf <= 0.02);
        CHECK(hedge_l2_gap(sys, hd, hf) <= 0.02);
        CHECK(fredholm_residual(hf, sys) <= 1e-5);
        // the direct hedge solves the same equation up to sampling noise in
        // its nodal derivatives
        CHECK(fredholm_residual(hd, sys) <= 0.05);
    }
}

TEST_CASE("plug-back residual decreases under grid refinement") {
    const auto crit = Criterion::forward_start();
    const auto o = opts();
    double res[2];
    int idx = 0;
    for (std::size_t nodes : {128u, 512u}) {
        const auto model = TwoPeriodModel::bachelier(1.0, 1.0, {1e-3, 1e-3}, nodes);
        auto sys = build_fredholm_system(crit, model, o);
        auto [hf, vf] = solve_fredholm_hedge(sys, crit, model, o);
        res[idx++] = fredholm_residual(hf, sys);
    }
    CHECK(res[1] < res[0]);
}

TEST_CASE("perturbing an optimal hedge raises the plug-back residual") {
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::bachelier(1.0, 1.0, {1e-3, 1e-3}, 256);
    const auto o = opts();
    auto sys = build_fredholm_system(crit, model, o);
    auto [hf, vf] = solve_fredholm_hedge(sys, crit, model, o);
    const double base = fredholm_residual(hf, sys);

    HedgeFunction bent = hf;
    for (std::size_t i = 1; i + 1 < bent.values.size(); ++i) {
        bent.values[i] += 0.1 * std::sin(static_cast<double>(i));
    }
    CHECK(fredholm_residual(bent, sys) > base);
    CHECK(evaluate_U_M(crit, model, bent, 2.0, o) > vf);
}

TEST_CASE("normal equations are positive semidefinite") {
    const auto crit = Criterion::forward_start();
    SensitivityEngine engine(crit, TwoPeriodModel::black_scholes(0.4, 1.0, {1e-3, 1e-3}, 64),
                             opts(50000));
    std::vector<double> diag, off, rhs;
    engine.assemble_normal_system(engine.fields().grid, diag, off, rhs);
    REQUIRE(diag.size() == engine.fields().grid.n);
    REQUIRE(off.size() == diag.size() - 1);
    double trace = 0.0;
    for (double d : diag) trace += d;
    CHECK(tridiag_positive_definite(diag, off, 1e-9 * trace));
}

TEST_CASE("metric ordering on a shared engine") {
    const auto crit = Criterion::forward_start();
    SensitivityEngine engine(crit, TwoPeriodModel::black_scholes(0.4, 1.0, {1e-3, 1e-3}, 256),
                             opts(100000));
    const auto ad_m = engine.report_for(Constraint::M, Metric::Adapted);
    const auto std_m = engine.report_for(Constraint::M, Metric::Standard);
    const auto std_none = engine.report_for(Constraint::None, Metric::Standard);
    auto slack = [](const SensitivityReport& a, const SensitivityReport& b) {
        return 2.0 * (a.diagnostics.mc_stderr + b.diagnostics.mc_stderr) + 1e-12;
    };
    CHECK(ad_m.value <= std_m.value + slack(ad_m, std_m));
    CHECK(std_m.value <= std_none.value + slack(std_m, std_none));
}

TEST_CASE("unsupported combinations are rejected") {
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::bachelier(1.0, 1.0, {1e-3, 1e-3}, 64);

    SensitivityEngine engine(crit, model, opts(20000));
    CHECK_THROWS_AS(engine.report_for(Constraint::M1, Metric::Standard), std::invalid_argument);
    CHECK_THROWS_AS(engine.report_for(Constraint::M_M1, Metric::Standard), std::invalid_argument);

    auto o3 = opts(20000);
    o3.p = 3.0;
    CHECK_THROWS_AS(direct_minimize_U_M(crit, model, 3.0, 64, o3), std::invalid_argument);
    CHECK_THROWS_AS(build_fredholm_system(crit, model, o3), std::invalid_argument);
}
