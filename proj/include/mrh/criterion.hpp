#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrh/model.hpp"

namespace mrh {

enum class CriterionKind { Linear, OptimalStopping };

// Criterion g evaluated on two-period laws.  Linear criteria carry a payoff
// f(x1,x2) and its (sub)gradient; optimal-stopping criteria carry the stage
// costs l1(x1), l2(x1,x2) of the minimization  g(mu) = inf_tau E[l_tau].
// Gradients use the subgradient selection 0 on kink sets.  x2_kinks reports,
// for a fixed x1, the x2-locations where the payoff (or l2) is non-smooth so
// conditional quadratures can split there; it may be left empty.
struct Criterion {
    CriterionKind kind = CriterionKind::Linear;
    std::string label;

    // Linear payoff data.
    std::function<double(double, double)> payoff;
    std::function<std::pair<double, double>(double, double)> payoff_grad;

    // Optimal stopping data (sense: minimize).
    std::function<double(double)> l1;
    std::function<double(double)> dl1;
    std::function<double(double, double)> l2;
    std::function<std::pair<double, double>(double, double)> dl2;

    std::function<std::vector<double>(double)> x2_kinks;

    // Forward-start payoff (x2 - x1)^+.
    static Criterion forward_start();
    // Two-period American put under discount rate `rate`.  The convention
    // flag selects how the exercise dates are discounted:
    //   "t12": l1 = e^{-rate}(K - x1)^+,   l2 = e^{-2 rate}(K - x2)^+
    //   "t01": l1 = (K - x1)^+,            l2 = e^{-rate}(K - x2)^+
    static Criterion american_put(double strike, double rate,
                                  const std::string& discount_convention = "t12");
    // Payoff from the expression grammar over x1, x2.
    static Criterion from_expression(const std::string& source);
    static Criterion constant(double c);
    static Criterion linear(std::function<double(double, double)> payoff,
                            std::function<std::pair<double, double>(double, double)> grad,
                            std::function<std::vector<double>(double)> kinks, std::string label);
    // Criterion scaled by lambda > 0 (payoff and gradients).
    static Criterion scaled(const Criterion& c, double lambda);
};

// Exercise rule tau(x1) in {1,2} of the stopping problem bound to a model:
// tau = 1 iff l1(x1) <= E1[l2(x1, X2)], ties resolved to 1.  The sign changes
// of the continuation advantage are bracketed on a scan grid (wider than I)
// and refined by bisection, so the rule is exact up to root tolerance.
class StoppingRule {
  public:
    StoppingRule(const Criterion& criterion, const TwoPeriodModel& model);

    int tau(double x1) const;
    const std::vector<double>& boundaries() const { return boundaries_; }

    // continuation advantage s(x1) = E1[l2] - l1(x1); tau = 1 iff s >= 0
    double advantage(double x1) const;

  private:
    const Criterion* criterion_;
    const TwoPeriodModel* model_;
    std::vector<double> boundaries_;
    std::vector<int> region_tau_;  // tau value on each region between boundaries
};

// Criterion bound to a model: resolves the stopping rule once and exposes the
// effective gradient field (the field of the frozen payoff l_tau for
// optimal-stopping criteria).  Immutable after construction.
class CriterionContext {
  public:
    CriterionContext(const Criterion& criterion, const TwoPeriodModel& model);

    const Criterion& criterion() const { return *criterion_; }
    const TwoPeriodModel& model() const { return *model_; }
    const StoppingRule* rule() const { return rule_ ? &*rule_ : nullptr; }

    // (d1, d2) of the linear-derivative kernel at (x1, x2).
    std::pair<double, double> grad(double x1, double x2) const;
    // Frozen-payoff value at (x1, x2): f or l_tau.
    double value_at(double x1, double x2) const;
    // x2-kink locations for conditional quadrature splitting at this x1.
    std::vector<double> x2_kinks(double x1) const;

  private:
    const Criterion* criterion_;
    const TwoPeriodModel* model_;
    std::optional<StoppingRule> rule_;
};

// --- module operations ------------------------------------------------------

// Gradient field (d1 delta, d2 delta) at x; optimal-stopping criteria use the
// exercise rule of `model` (d2 = 0 on the stopping region).
std::pair<double, double> gradient(const Criterion& criterion, const TwoPeriodModel& model,
                                   double x1, double x2);

// Compensated gradient (E1[d1 delta | X1 = x1], d2 delta(x1, x2)).
std::pair<double, double> compensated_gradient(const Criterion& criterion,
                                               const TwoPeriodModel& model, double x1, double x2);

// tau(x1) of the optimal stopping problem; throws for linear criteria.
int stopping_rule(const Criterion& criterion, const TwoPeriodModel& model, double x1);

// Weighted average of the frozen payoff over a sample.  For optimal-stopping
// criteria the stopping rule of `model` (the reference law) is applied, i.e.
// this is the linearized criterion value.  Weights may be empty (uniform).
double criterion_value(const Criterion& criterion, const std::vector<SamplePoint>& sample,
                       const std::vector<double>& weights, const TwoPeriodModel* model);

}  // namespace mrh
