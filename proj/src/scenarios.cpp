#include "mrh/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mrh {

namespace {

double signed_pow(double y, double e) {
    if (y == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(y), e), y);
}

constexpr std::size_t kRecentreBins = 64;

}  // namespace

Direction displacement_direction(const SensitivityEngine& engine, Constraint c, Metric m,
                                 bool* zero_direction) {
    const DirectionSpec spec = engine.direction_spec(c, m);
    if (zero_direction != nullptr) *zero_direction = !(spec.norm > 0.0);
    if (!(spec.norm > 0.0)) {
        return [](double, double) { return std::make_pair(0.0, 0.0); };
    }
    const double pprime = spec.pprime;
    const double denom = std::pow(spec.norm, pprime - 1.0);
    const auto phi = spec.phi;
    if (spec.per_block) {
        // blockwise gradient of the l^{p'} norm: preserves causality and, via
        // the FOC, the martingale property of the displaced measure
        return [phi, pprime, denom](double x1, double x2) {
            const auto b = phi(x1, x2);
            return std::make_pair(signed_pow(b.first, pprime - 1.0) / denom,
                                  signed_pow(b.second, pprime - 1.0) / denom);
        };
    }
    return [phi, pprime, denom](double x1, double x2) {
        const auto b = phi(x1, x2);
        const double n2 = std::sqrt(b.first * b.first + b.second * b.second);
        const double factor = n2 > 0.0 ? std::pow(n2, pprime - 2.0) / denom : 0.0;
        return std::make_pair(factor * b.first, factor * b.second);
    };
}

WorstCaseScenario pushforward_scenario(const SensitivityEngine& engine, const Direction& T,
                                       double r, std::size_t n, std::uint64_t seed, bool recentre,
                                       Constraint c, Metric m) {
    if (r < 0.0) throw std::invalid_argument("pushforward_scenario: r must be >= 0");
    WorstCaseScenario sc;
    sc.r = r;
    sc.constraint = c;
    sc.metric = m;
    sc.base = engine.model().sample(n, seed);
    sc.displaced.resize(sc.base.size());

    const double p = engine.options().p;
    RunningStat dist;
    for (std::size_t j = 0; j < sc.base.size(); ++j) {
        const double x1 = sc.base[j].x1, x2 = sc.base[j].x2;
        const auto t = T(x1, x2);
        sc.displaced[j] = {x1 + r * t.first, x2 + r * t.second};
        const double step2 = r * r * (t.first * t.first + t.second * t.second);
        dist.add(p == 2.0 ? step2 : std::pow(step2, 0.5 * p));
    }
    sc.empirical_distance = dist.mean() > 0.0 ? std::pow(dist.mean(), 1.0 / p) : 0.0;

    if (recentre && m == Metric::Standard &&
        (c == Constraint::M || c == Constraint::M_M1) && r > 0.0) {
        sc.recentred = true;
        std::vector<std::size_t> order(sc.displaced.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return sc.displaced[a].x1 < sc.displaced[b].x1;
        });
        const std::size_t nb = std::min<std::size_t>(kRecentreBins, order.size());
        for (std::size_t b = 0; b < nb; ++b) {
            const std::size_t beg = b * order.size() / nb;
            const std::size_t end = (b + 1) * order.size() / nb;
            if (beg >= end) continue;
            double mean = 0.0;
            for (std::size_t k = beg; k < end; ++k) {
                const SamplePoint& q = sc.displaced[order[k]];
                mean += q.x2 - q.x1;
            }
            mean /= static_cast<double>(end - beg);
            for (std::size_t k = beg; k < end; ++k) sc.displaced[order[k]].x2 -= mean;
            sc.recentre_shift = std::max(sc.recentre_shift, std::abs(mean));
        }
    }

    if (r > 0.0) {
        const CriterionContext& ctx = engine.ctx();
        RunningStat gain;
        for (std::size_t j = 0; j < sc.base.size(); ++j) {
            const double dv = ctx.value_at(sc.displaced[j].x1, sc.displaced[j].x2) -
                              ctx.value_at(sc.base[j].x1, sc.base[j].x2);
            gain.add(dv / r);
        }
        sc.gain = gain.mean();
        sc.gain_stderr = gain.stderr_mean();
    }
    return sc;
}

GainTable first_order_gain(const SensitivityEngine& engine, Constraint c, Metric m,
                           const std::vector<double>& radii, std::size_t n, std::uint64_t seed) {
    if (radii.empty()) throw std::invalid_argument("first_order_gain: need at least one radius");
    const Direction T = displacement_direction(engine, c, m);
    GainTable table;
    for (double r : radii) {
        // gains validate the optimality direction on the linearized criterion,
        // so the raw pushforward is used; martingale recentring (a feasibility
        // polish whose error is reported, not bounded) would bias them.
        const WorstCaseScenario sc = pushforward_scenario(engine, T, r, n, seed, false, c, m);
        table.rows.push_back({r, sc.gain, sc.gain_stderr});
    }
    // Lagrange extrapolation of gain(r) to r = 0 through the smallest radii
    std::vector<GainRow> pts = table.rows;
    std::sort(pts.begin(), pts.end(), [](const GainRow& a, const GainRow& b) { return a.r < b.r; });
    if (pts.size() > 3) pts.resize(3);
    double extrap = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double weight = 1.0;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (j == i) continue;
            weight *= -pts[j].r / (pts[i].r - pts[j].r);
        }
        extrap += weight * pts[i].gain;
    }
    table.extrapolated = extrap;
    table.sensitivity = engine.report_for(c, m).value;
    return table;
}

}  // namespace mrh
