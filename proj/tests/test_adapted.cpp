#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mrh/adapted.hpp"
#include "mrh/stats.hpp"

using namespace mrh;

namespace {

EvalOptions fast_opts(std::size_t n = 200000, double p = 2.0) {
    EvalOptions o;
    o.seed = 42;
    o.n_samples = n;
    o.p = p;
    return o;
}

// Adapted-martingale objective evaluated on the engine's own sample:
// E[ (|A(x1) - h(x1)|^2 + |g2 + h(x1)|^2)^{p'/2} ]^{1/p'}.
double adapted_martingale_objective(const SensitivityEngine& e, const PiecewiseLinear& h) {
    const auto& sample = e.sample();
    const auto& g2 = e.grad2();
    const PiecewiseLinear A{e.fields().grid, e.fields().A};
    const double pp = e.pprime();
    RunningStat acc;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double x1 = sample[i].x1;
        const double phi1 = A(x1) - h(x1);
        const double phi2 = g2[i] + h(x1);
        acc.add(std::pow(phi1 * phi1 + phi2 * phi2, pp / 2.0));
    }
    return std::pow(acc.mean(), 1.0 / pp);
}

}  // namespace

TEST_CASE("constant payoffs have zero sensitivity under every constraint") {
    const auto crit = Criterion::constant(4.2);
    const auto model = TwoPeriodModel::bachelier(1.0, 1.0, {1e-3, 1e-3}, 128);
    for (double p : {2.0, 3.0}) {
        const auto o = fast_opts(20000, p);
        CHECK(adapted_unconstrained_sensitivity(crit, model, p, o).value <= 1e-12);
        CHECK(adapted_martingale_sensitivity(crit, model, p, o).value <= 1e-12);
        CHECK(marginal_hedge_and_sensitivity(crit, model, p, o).value <= 1e-12);
        CHECK(martingale_marginal_hedge_and_sensitivity(crit, model, p, o).value <= 1e-12);
        const auto h = adapted_martingale_hedge(crit, model, p, o);
        for (double v : h.values) CHECK(std::fabs(v) <= 1e-9);
    }
}

TEST_CASE("bachelier forward-start closed forms at p = 2") {
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::bachelier(0.7, 1.0, {1e-3, 1e-3}, 256);
    const auto o = fast_opts();

    const auto none = adapted_unconstrained_sensitivity(crit, model, 2.0, o);
    CHECK(std::fabs(none.value - std::sqrt(3.0) / 2.0) <= 6e-3);

    const auto mart = adapted_martingale_sensitivity(crit, model, 2.0, o);
    CHECK(std::fabs(mart.value - 0.5) <= 6e-3);
    REQUIRE(mart.h.has_value());
    for (double v : mart.h->values) CHECK(v == doctest::Approx(-0.5).epsilon(1e-8));

    const auto marg = marginal_hedge_and_sensitivity(crit, model, 2.0, o);
    CHECK(std::fabs(marg.value - std::sqrt(0.5)) <= 6e-3);
    REQUIRE(marg.f.has_value());
    for (double v : marg.f->values) CHECK(v == doctest::Approx(0.5).epsilon(1e-8));

    const auto both = martingale_marginal_hedge_and_sensitivity(crit, model, 2.0, o);
    CHECK(std::fabs(both.value - 0.5) <= 6e-3);
    REQUIRE(both.h.has_value());
    REQUIRE(both.f.has_value());
    for (double v : both.h->values) CHECK(v == doctest::Approx(-0.5).epsilon(1e-8));
    for (double v : both.f->values) CHECK(std::fabs(v) <= 1e-8);
}

TEST_CASE("black-scholes forward-start values match the lognormal closed forms") {
    // With pi = P(X2 > X1 | X1) = Phi(-sigma/2), the p = 2 values are
    // sqrt(pi^2 + pi), sqrt(pi(1-pi)), sqrt(pi), sqrt(pi(1-pi)).
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::black_scholes(0.4, 1.0, {1e-3, 1e-3}, 256);
    const auto o = fast_opts();
    const double pi = normal_cdf(-0.2);

    const auto none = adapted_unconstrained_sensitivity(crit, model, 2.0, o);
    CHECK(std::fabs(none.value - std::sqrt(pi * pi + pi)) <=
          4.0 * none.diagnostics.mc_stderr + 1e-4);
    const auto mart = adapted_martingale_sensitivity(crit, model, 2.0, o);
    CHECK(std::fabs(mart.value - std::sqrt(pi * (1.0 - pi))) <=
          4.0 * mart.diagnostics.mc_stderr + 1e-4);
    const auto marg = marginal_hedge_and_sensitivity(crit, model, 2.0, o);
    CHECK(std::fabs(marg.value - std::sqrt(pi)) <= 4.0 * marg.diagnostics.mc_stderr + 1e-4);
    const auto both = martingale_marginal_hedge_and_sensitivity(crit, model, 2.0, o);
    CHECK(std::fabs(both.value - std::sqrt(pi * (1.0 - pi))) <=
          4.0 * both.diagnostics.mc_stderr + 1e-4);
}

TEST_CASE("closed form and root solver agree at p = 2") {
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::black_scholes(0.4, 1.0, {1e-3, 1e-3}, 128);
    auto o = fast_opts(50000);
    const auto closed = adapted_martingale_hedge(crit, model, 2.0, o);
    o.force_root_solver = true;
    const auto rooted = adapted_martingale_hedge(crit, model, 2.0, o);
    REQUIRE(closed.values.size() == rooted.values.size());
    for (std::size_t i = 0; i < closed.values.size(); ++i) {
        CHECK(std::fabs(closed.values[i] - rooted.values[i]) <= 1e-6);
    }
}

TEST_CASE("general-p values at p = 3 match hand-derived constants") {
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::bachelier(1.0, 1.0, {1e-3, 1e-3}, 128);
    const auto o = fast_opts(200000, 3.0);

    // blocks (−1/2, 1_A): E[((1/4 + 1_A)^{p'/2})]^{1/p'} with p' = 3/2
    const double none_expected =
        std::pow(0.5 * (std::pow(1.25, 0.75) + std::pow(0.25, 0.75)), 2.0 / 3.0);
    const auto none = adapted_unconstrained_sensitivity(crit, model, 3.0, o);
    CHECK(std::fabs(none.value - none_expected) <= 5e-3);

    // h = −1/2 still solves the martingale FOC; blocks (0, 1_A − 1/2)
    const auto mart = adapted_martingale_sensitivity(crit, model, 3.0, o);
    CHECK(std::fabs(mart.value - 0.5) <= 5e-3);
    REQUIRE(mart.h.has_value());
    for (double v : mart.h->values) CHECK(v == doctest::Approx(-0.5).epsilon(1e-7));

    // marginal blocks (0, 1_A): E[1_A]^{1/p'} = (1/2)^{2/3}
    const auto marg = marginal_hedge_and_sensitivity(crit, model, 3.0, o);
    CHECK(std::fabs(marg.value - std::pow(0.5, 2.0 / 3.0)) <= 5e-3);

    const auto both = martingale_marginal_hedge_and_sensitivity(crit, model, 3.0, o);
    CHECK(std::fabs(both.value - 0.5) <= 5e-3);
}

TEST_CASE("constraint ordering holds with shared noise") {
    const auto crit = Criterion::forward_start();
    for (double p : {2.0, 3.0}) {
        SensitivityEngine engine(crit, TwoPeriodModel::black_scholes(0.4, 1.0, {1e-3, 1e-3}, 128),
                                 fast_opts(100000, p));
        const auto none = engine.report_for(Constraint::None, Metric::Adapted);
        const auto mart = engine.report_for(Constraint::M, Metric::Adapted);
        const auto marg = engine.report_for(Constraint::M1, Metric::Adapted);
        const auto both = engine.report_for(Constraint::M_M1, Metric::Adapted);
        auto slack = [](const SensitivityReport& a, const SensitivityReport& b) {
            return 2.0 * (a.diagnostics.mc_stderr + b.diagnostics.mc_stderr) + 1e-12;
        };
        CHECK(both.value <= marg.value + slack(both, marg));
        CHECK(marg.value <= none.value + slack(marg, none));
        CHECK(both.value <= mart.value + slack(both, mart));
        CHECK(mart.value <= none.value + slack(mart, none));
    }
}

TEST_CASE("martingale objective is convex in the hedge") {
    const auto crit = Criterion::forward_start();
    SensitivityEngine engine(crit, TwoPeriodModel::black_scholes(0.4, 1.0, {1e-3, 1e-3}, 64),
                             fast_opts(20000));
    const auto& grid = engine.fields().grid;
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v1(grid.n), v2(grid.n), mid(grid.n);
        for (std::size_t i = 0; i < grid.n; ++i) {
            v1[i] = u(gen);
            v2[i] = u(gen);
            mid[i] = 0.5 * (v1[i] + v2[i]);
        }
        const double um = adapted_martingale_objective(engine, {grid, mid});
        const double u1 = adapted_martingale_objective(engine, {grid, v1});
        const double u2 = adapted_martingale_objective(engine, {grid, v2});
        CHECK(um <= 0.5 * (u1 + u2) + 1e-9);
    }
}

TEST_CASE("sensitivities are positively homogeneous at p = 2") {
    const auto base = Criterion::forward_start();
    const auto scaled = Criterion::scaled(base, 2.5);
    const auto model = TwoPeriodModel::black_scholes(0.4, 1.0, {1e-3, 1e-3}, 128);
    const auto o = fast_opts(50000);
    const auto a = adapted_martingale_sensitivity(base, model, 2.0, o);
    const auto b = adapted_martingale_sensitivity(scaled, model, 2.0, o);
    CHECK(b.value == doctest::Approx(2.5 * a.value).epsilon(1e-10));
    REQUIRE(a.h.has_value());
    REQUIRE(b.h.has_value());
    for (std::size_t i = 0; i < a.h->values.size(); ++i) {
        CHECK(b.h->values[i] == doctest::Approx(2.5 * a.h->values[i]).epsilon(1e-10));
    }
    const auto fa = marginal_hedge_and_sensitivity(base, model, 2.0, o);
    const auto fb = marginal_hedge_and_sensitivity(scaled, model, 2.0, o);
    CHECK(fb.value == doctest::Approx(2.5 * fa.value).epsilon(1e-10));
}

TEST_CASE("hedges satisfy their first-order conditions") {
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::black_scholes(0.4, 1.0, {1e-3, 1e-3}, 128);
    for (double p : {2.0, 3.0}) {
        const auto mart = adapted_martingale_sensitivity(crit, model, p, fast_opts(50000, p));
        CHECK(mart.diagnostics.foc_residual <= 1e-8);
        const auto both =
            martingale_marginal_hedge_and_sensitivity(crit, model, p, fast_opts(50000, p));
        CHECK(both.diagnostics.foc_residual <= 1e-8);
    }
    // the marginal hedge's defining relation: first residual block vanishes
    SensitivityEngine engine(crit, model, fast_opts(50000));
    const auto marg = engine.report_for(Constraint::M1, Metric::Adapted);
    REQUIRE(marg.f.has_value());
    const PiecewiseLinear A{engine.fields().grid, engine.fields().A};
    for (std::size_t i = 0; i < marg.f->grid.n; ++i) {
        const double x1 = marg.f->grid.node(i);
        CHECK(std::fabs(A(x1) + (*marg.f)(x1)) <= 1e-10);
    }
}

TEST_CASE("hedge functions clamp outside the working interval") {
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::bachelier(1.0, 1.0, {1e-3, 1e-3}, 64);
    const auto h = adapted_martingale_hedge(crit, model, 2.0, fast_opts(20000));
    CHECK(h(model.interval_lo() - 5.0) == h.values.front());
    CHECK(h(model.interval_hi() + 5.0) == h.values.back());
}

TEST_CASE("bachelier sensitivities do not depend on sigma") {
    const auto crit = Criterion::forward_start();
    const auto o = fast_opts(100000);
    double prev[4];
    bool first = true;
    for (double sigma : {0.3, 0.9}) {
        const auto model = TwoPeriodModel::bachelier(sigma, 1.0, {1e-3, 1e-3}, 128);
        const double cur[4] = {
            adapted_unconstrained_sensitivity(crit, model, 2.0, o).value,
            adapted_martingale_sensitivity(crit, model, 2.0, o).value,
            marginal_hedge_and_sensitivity(crit, model, 2.0, o).value,
            martingale_marginal_hedge_and_sensitivity(crit, model, 2.0, o).value,
        };
        if (!first) {
            // same seed, scale-equivariant model: the indicator events coincide
            for (int i = 0; i < 4; ++i) CHECK(std::fabs(cur[i] - prev[i]) <= 1e-8);
        }
        for (int i = 0; i < 4; ++i) prev[i] = cur[i];
        first = false;
    }
}

TEST_CASE("optimal stopping sensitivities") {
    const auto model = TwoPeriodModel::black_scholes(0.5, 1.0, {1e-3, 1e-3}, 256);
    const auto o = fast_opts();

    SUBCASE("constant stage costs give zero sensitivities") {
        Criterion flat;
        flat.kind = CriterionKind::OptimalStopping;
        flat.l1 = [](double) { return 0.3; };
        flat.dl1 = [](double) { return 0.0; };
        flat.l2 = [](double, double) { return 0.7; };
        flat.dl2 = [](double, double) { return std::pair<double, double>{0.0, 0.0}; };
        for (auto c : {Constraint::None, Constraint::M, Constraint::M1, Constraint::M_M1}) {
            CHECK(optimal_stopping_sensitivities(flat, model, 2.0, c, fast_opts(20000)).value <=
                  1e-12);
        }
    }

    SUBCASE("marginal value equals the frozen-payoff norm") {
        const auto put = Criterion::american_put(0.8, 0.05);
        const auto rep = optimal_stopping_sensitivities(put, model, 2.0, Constraint::M1, o);
        const StoppingRule rule(put, model);
        RunningStat sq;
        for (const auto& pt : model.sample(o.n_samples, o.seed)) {
            const double d2 = rule.tau(pt.x1) == 2 ? put.dl2(pt.x1, pt.x2).second : 0.0;
            sq.add(d2 * d2);
        }
        const double simplified = std::sqrt(sq.mean());
        CHECK(std::fabs(rep.value - simplified) <= 1e-3 * simplified);

        // f_m = -E1[d1 l_tau]: discounted unit slope in the exercise region,
        // zero deep in the continuation region (l2 does not depend on x1)
        REQUIRE(rep.f.has_value());
        REQUIRE(rule.boundaries().size() == 1);
        const double b = rule.boundaries()[0];
        const double x_stop = 0.5 * (b + 0.8);
        const double x_cont = 0.5 * (model.interval_lo() + b);
        CHECK((*rep.f)(x_stop) == doctest::Approx(std::exp(-0.05)).epsilon(1e-6));
        CHECK(std::fabs((*rep.f)(x_cont)) <= 1e-6);
    }

    SUBCASE("martingale hedge satisfies its first-order condition") {
        const auto put = Criterion::american_put(0.8, 0.05);
        const auto bach = TwoPeriodModel::bachelier(0.5, 1.0, {1e-3, 1e-3}, 256);
        const auto rep = optimal_stopping_sensitivities(put, bach, 2.0, Constraint::M, o);
        CHECK(rep.diagnostics.foc_residual <= 1e-6);
        CHECK(rep.value >= 0.0);
    }

    SUBCASE("linear criteria are rejected") {
        CHECK_THROWS_AS(optimal_stopping_sensitivities(Criterion::forward_start(), model, 2.0,
                                                       Constraint::M, fast_opts(20000)),
                        std::invalid_argument);
    }
}
