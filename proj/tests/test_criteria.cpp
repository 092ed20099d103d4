#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mrh/criterion.hpp"
#include "mrh/expr.hpp"
#include "mrh/stats.hpp"

using namespace mrh;

TEST_CASE("forward-start gradient field") {
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::bachelier(1.0);
    auto [a1, a2] = gradient(crit, model, 1.0, 2.0);
    CHECK(a1 == -1.0);
    CHECK(a2 == 1.0);
    auto [b1, b2] = gradient(crit, model, 2.0, 1.0);
    CHECK(b1 == 0.0);
    CHECK(b2 == 0.0);
    // subgradient selection 0 on the kink set
    auto [k1, k2] = gradient(crit, model, 1.0, 1.0);
    CHECK(k1 == 0.0);
    CHECK(k2 == 0.0);
}

TEST_CASE("gradient scales linearly with the payoff") {
    const auto crit = Criterion::scaled(Criterion::forward_start(), 2.5);
    const auto model = TwoPeriodModel::bachelier(1.0);
    auto [g1, g2] = gradient(crit, model, 1.0, 2.0);
    CHECK(g1 == doctest::Approx(-2.5).epsilon(1e-14));
    CHECK(g2 == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("compensated gradient of the forward-start payoff") {
    const auto crit = Criterion::forward_start();
    const auto model = TwoPeriodModel::bachelier(1.0);
    for (double x1 : {-1.1, 0.0, 0.7, 2.0}) {
        auto [c1, c2] = compensated_gradient(crit, model, x1, x1 + 0.3);
        CHECK(c1 == doctest::Approx(-0.5).epsilon(1e-9));
        // second block must equal the raw gradient second block exactly
        CHECK(c2 == gradient(crit, model, x1, x1 + 0.3).second);
    }
}

TEST_CASE("compensated gradient trivial cases") {
    const auto model = TwoPeriodModel::bachelier(1.0);
    auto [c1, c2] = compensated_gradient(Criterion::constant(3.0), model, 0.2, 0.5);
    CHECK(c1 == 0.0);
    CHECK(c2 == 0.0);

    const auto only_x2 = Criterion::linear([](double, double x2) { return x2 * x2; },
                                           [](double, double x2) {
                                               return std::pair<double, double>{0.0, 2.0 * x2};
                                           },
                                           nullptr, "x2 squared");
    auto [d1, d2] = compensated_gradient(only_x2, model, 0.2, 0.5);
    CHECK(std::fabs(d1) <= 1e-12);
    CHECK(d2 == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("finite differences confirm expression gradients") {
    const auto crit = Criterion::from_expression("x1*x2 + x2*x2 - 2*x1");
    const double eps = 1e-6;
    for (auto [x1, x2] : {std::pair{0.3, 1.2}, std::pair{-0.8, 0.4}, std::pair{1.5, -0.6}}) {
        auto [g1, g2] = crit.payoff_grad(x1, x2);
        const double fd1 = (crit.payoff(x1 + eps, x2) - crit.payoff(x1 - eps, x2)) / (2 * eps);
        const double fd2 = (crit.payoff(x1, x2 + eps) - crit.payoff(x1, x2 - eps)) / (2 * eps);
        CHECK(g1 == doctest::Approx(fd1).epsilon(1e-6));
        CHECK(g2 == doctest::Approx(fd2).epsilon(1e-6));
    }
}

TEST_CASE("expression grammar parses payoffs and rejects garbage") {
    const auto fwd = Criterion::from_expression("max(x2 - x1, 0)");
    CHECK(fwd.payoff(1.0, 2.0) == 1.0);
    CHECK(fwd.payoff(2.0, 1.0) == 0.0);
    CHECK(fwd.payoff_grad(1.0, 2.0).first == -1.0);
    CHECK_THROWS(Expression::parse("x3 + 1"));
    CHECK_THROWS(Expression::parse("max(x1"));
    CHECK_THROWS(Expression::parse(""));
}

TEST_CASE("stopping rule on toy stage costs") {
    const auto model = TwoPeriodModel::bachelier(1.0);
    Criterion zero_first;
    zero_first.kind = CriterionKind::OptimalStopping;
    zero_first.l1 = [](double) { return 0.0; };
    zero_first.dl1 = [](double) { return 0.0; };
    zero_first.l2 = [](double x1, double x2) { return (x2 - x1) * (x2 - x1); };
    zero_first.dl2 = [](double x1, double x2) {
        return std::pair<double, double>{-2.0 * (x2 - x1), 2.0 * (x2 - x1)};
    };
    for (double x1 : {-1.0, 0.0, 1.5}) CHECK(stopping_rule(zero_first, model, x1) == 1);

    Criterion one_vs_zero = zero_first;
    one_vs_zero.l1 = [](double) { return 1.0; };
    one_vs_zero.l2 = [](double, double) { return 0.0; };
    one_vs_zero.dl2 = [](double, double) { return std::pair<double, double>{0.0, 0.0}; };
    for (double x1 : {-1.0, 0.0, 1.5}) CHECK(stopping_rule(one_vs_zero, model, x1) == 2);

    CHECK_THROWS_AS(stopping_rule(Criterion::forward_start(), model, 0.0), std::invalid_argument);
}

TEST_CASE("american put exercise boundary on a high-vol lognormal") {
    const auto crit = Criterion::american_put(0.8, 0.05);
    const auto model = TwoPeriodModel::black_scholes(0.5, 1.0);
    const StoppingRule rule(crit, model);

    // tau is piecewise constant with a single switch on I
    const auto& g = model.grid1();
    int switches = 0;
    int prev = rule.tau(g.node(0));
    for (std::size_t i = 1; i < g.n; ++i) {
        const int cur = rule.tau(g.node(i));
        if (cur != prev) ++switches;
        prev = cur;
    }
    CHECK(switches == 1);
    REQUIRE(rule.boundaries().size() == 1);

    // in the stopping region below the strike the frozen gradient is the
    // discounted intrinsic slope
    const double boundary = rule.boundaries()[0];
    REQUIRE(boundary < 0.8);
    const double x1 = 0.5 * (boundary + 0.8);
    REQUIRE(rule.tau(x1) == 1);
    auto [g1, g2] = gradient(crit, model, x1, 1.3);
    CHECK(g1 == doctest::Approx(-std::exp(-0.05)).epsilon(1e-12));
    CHECK(g2 == 0.0);

    // continuation region: gradient equals the frozen second-stage payoff field
    double cont_x1 = g.node(0);
    REQUIRE(rule.tau(cont_x1) == 2);
    auto [h1, h2] = gradient(crit, model, cont_x1, 0.4);
    CHECK(h1 == 0.0);
    CHECK(h2 == doctest::Approx(-std::exp(-0.10)).epsilon(1e-12));
    auto [j1, j2] = gradient(crit, model, cont_x1, 1.4);
    CHECK(j1 == 0.0);
    CHECK(j2 == 0.0);
}

TEST_CASE("stopping advantage agrees with nested monte carlo") {
    const auto crit = Criterion::american_put(0.8, 0.05);
    const auto model = TwoPeriodModel::black_scholes(0.5, 1.0);
    const StoppingRule rule(crit, model);
    for (double x1 : {0.4, 0.8, 1.6}) {
        RunningStat mc;
        for (double x2 : model.conditional_sample(x1, 200000, 99)) mc.add(crit.l2(x1, x2));
        const double adv_mc = mc.mean() - crit.l1(x1);
        CHECK(std::fabs(rule.advantage(x1) - adv_mc) <= 3.0 * mc.stderr_mean());
    }
}

TEST_CASE("discount conventions shift the stage costs") {
    const auto t12 = Criterion::american_put(0.8, 0.05, "t12");
    const auto t01 = Criterion::american_put(0.8, 0.05, "t01");
    CHECK(t12.l1(0.5) == doctest::Approx(std::exp(-0.05) * 0.3).epsilon(1e-14));
    CHECK(t01.l1(0.5) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(t12.l2(0.5, 0.6) == doctest::Approx(std::exp(-0.10) * 0.2).epsilon(1e-14));
    CHECK(t01.l2(0.5, 0.6) == doctest::Approx(std::exp(-0.05) * 0.2).epsilon(1e-14));
    CHECK_THROWS(Criterion::american_put(0.8, 0.05, "t23"));
}

TEST_CASE("criterion value on samples") {
    const auto model = TwoPeriodModel::bachelier(1.0);
    const auto sample = model.sample(1000000, 42);

    const auto fwd = Criterion::forward_start();
    RunningStat payoff;
    for (const auto& p : sample) payoff.add(std::max(p.x2 - p.x1, 0.0));
    const double v = criterion_value(fwd, sample, {}, &model);
    CHECK(v == doctest::Approx(payoff.mean()).epsilon(1e-12));
    CHECK(std::fabs(v - 0.3989422804) <= 3.0 * payoff.stderr_mean());

    CHECK(criterion_value(Criterion::constant(2.5), sample, {}, &model) ==
          doctest::Approx(2.5).epsilon(1e-14));

    CHECK_THROWS_AS(criterion_value(fwd, {}, {}, &model), std::invalid_argument);
    const std::vector<SamplePoint> two{{0.0, 1.0}, {0.0, -1.0}};
    CHECK_THROWS_AS(criterion_value(fwd, two, {0.0, 0.0}, &model), std::invalid_argument);
}

TEST_CASE("stopping criterion values use the reference rule") {
    const auto crit = Criterion::american_put(0.8, 0.05);
    const auto model = TwoPeriodModel::black_scholes(0.5, 1.0);
    const StoppingRule rule(crit, model);
    const auto sample = model.sample(20000, 5);
    RunningStat frozen;
    for (const auto& p : sample) {
        frozen.add(rule.tau(p.x1) == 1 ? crit.l1(p.x1) : crit.l2(p.x1, p.x2));
    }
    CHECK(criterion_value(crit, sample, {}, &model) ==
          doctest::Approx(frozen.mean()).epsilon(1e-12));
}
