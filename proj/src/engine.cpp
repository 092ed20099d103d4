#include "mrh/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace mrh {

namespace {

std::string node_message(const char* what, std::size_t node_index, double x1) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s at node %zu (x1 = %.6g)", what, node_index, x1);
    return std::string(buf);
}

constexpr double kRidge = 1e-10;

// LDL^T factorization/solve of a symmetric tridiagonal system; returns false
// when a pivot collapses relative to the largest diagonal entry.
bool ldlt_tridiag_solve(std::vector<double> diag, const std::vector<double>& off,
                        std::vector<double> rhs, std::vector<double>& out) {
    const std::size_t n = diag.size();
    double dmax = 0.0;
    for (double d : diag) dmax = std::max(dmax, std::abs(d));
    if (dmax == 0.0) return false;
    std::vector<double> l(n > 0 ? n - 1 : 0, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(diag[i] > 1e-14 * dmax)) return false;
        l[i] = off[i] / diag[i];
        diag[i + 1] -= l[i] * off[i];
    }
    if (!(diag[n - 1] > 1e-14 * dmax)) return false;
    for (std::size_t i = 1; i < n; ++i) rhs[i] -= l[i - 1] * rhs[i - 1];
    for (std::size_t i = 0; i < n; ++i) rhs[i] /= diag[i];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= l[i] * rhs[i + 1];
    out = std::move(rhs);
    return true;
}

// Forward substitution for (I - K)phi = rhs with K strictly lower triangular.
std::vector<double> forward_solve(const std::vector<std::vector<double>>& kernel,
                                  const std::vector<double>& rhs) {
    const std::size_t n = rhs.size();
    std::vector<double> phi(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = rhs[i];
        const std::vector<double>& row = kernel[i];
        for (std::size_t j = 0; j < i; ++j) acc += row[j] * phi[j];
        phi[i] = acc;
    }
    return phi;
}

}  // namespace

double l2_mu1_norm(const UniformGrid& grid, const std::vector<double>& q1,
                   const std::vector<double>& values) {
    const std::vector<double> w = grid.trapezoid_weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) acc += w[i] * q1[i] * values[i] * values[i];
    return std::sqrt(std::max(acc, 0.0));
}

SensitivityEngine::SensitivityEngine(Criterion criterion, TwoPeriodModel model, EvalOptions opts)
    : criterion_(std::move(criterion)),
      model_(std::move(model)),
      ctx_(criterion_, model_),
      opts_(opts),
      pprime_(0.0),
      fields_() {
    if (!(opts_.p > 1.0)) throw std::invalid_argument("EvalOptions.p: must exceed 1");
    if (opts_.n_samples < 2) throw std::invalid_argument("EvalOptions.n_samples: must be >= 2");
    pprime_ = opts_.p / (opts_.p - 1.0);
    fields_ = build_conditional_fields(ctx_, pprime_);
    sample_ = model_.sample(opts_.n_samples, opts_.seed);
    g1_.resize(sample_.size());
    g2_.resize(sample_.size());
    for (std::size_t j = 0; j < sample_.size(); ++j) {
        const auto g = ctx_.grad(sample_[j].x1, sample_[j].x2);
        g1_[j] = g.first;
        g2_[j] = g.second;
        if (!std::isfinite(g1_[j]) || !std::isfinite(g2_[j])) {
            throw std::runtime_error("SensitivityEngine: non-finite gradient on sample");
        }
    }
}

double SensitivityEngine::s_pow(double y) const {
    if (pprime_ == 2.0) return y;
    if (y == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(y), pprime_ - 1.0), y);
}

ValueEstimate SensitivityEngine::pair_norm(const std::vector<double>& phi1,
                                           const std::vector<double>& phi2) const {
    RunningStat acc;
    const bool quadratic = pprime_ == 2.0;
    for (std::size_t j = 0; j < phi1.size(); ++j) {
        const double sq = phi1[j] * phi1[j] + phi2[j] * phi2[j];
        acc.add(quadratic ? sq : std::pow(sq, 0.5 * pprime_));
    }
    const double mean = acc.mean();
    if (!(mean > 0.0)) return {0.0, 0.0};
    const double inv = 1.0 / pprime_;
    const double value = std::pow(mean, inv);
    const double stderr_value = acc.stderr_mean() * inv * std::pow(mean, inv - 1.0);
    return {value, stderr_value};
}

MeanEstimate SensitivityEngine::criterion_value() const {
    RunningStat acc;
    for (const SamplePoint& s : sample_) acc.add(ctx_.value_at(s.x1, s.x2));
    return {acc.mean(), acc.stderr_mean(), acc.count()};
}

// --- adapted metric ----------------------------------------------------------

double SensitivityEngine::cond_s_expectation(double x1, double h) const {
    return model_.conditional_expectation_split(
        x1,
        [this, h](double a, double b) { return s_pow(ctx_.grad(a, b).second + h); },
        ctx_.x2_kinks(x1));
}

double SensitivityEngine::solve_node_foc(double x1, double a, double start, bool with_a,
                                         std::size_t node_index) const {
    const auto focval = [&](double h) {
        const double rhs = cond_s_expectation(x1, h);
        return (with_a ? s_pow(a - h) : 0.0) - rhs;
    };
    double f0 = focval(start);
    if (std::abs(f0) <= opts_.foc_tol) return start;
    // focval is nonincreasing in h; expand a bracket geometrically around the start.
    double lo = start, hi = start, flo = f0, fhi = f0;
    double d = 0.5 * (1.0 + std::abs(start));
    bool bracketed = false;
    for (std::size_t k = 0; k < opts_.max_bracket; ++k) {
        if (f0 > 0.0) {
            hi = start + d;
            fhi = focval(hi);
            if (fhi <= 0.0) {
                bracketed = true;
                break;
            }
        } else {
            lo = start - d;
            flo = focval(lo);
            if (flo >= 0.0) {
                bracketed = true;
                break;
            }
        }
        d *= 2.0;
    }
    if (!bracketed) {
        throw std::runtime_error(
            node_message("adapted hedge FOC: failed to bracket root", node_index, x1));
    }
    (void)flo;
    (void)fhi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = focval(mid);
        if (std::abs(fm) <= opts_.foc_tol) return mid;
        if (fm > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    throw std::runtime_error(
        node_message("adapted hedge FOC: root finder did not converge", node_index, x1));
}

HedgeFunction SensitivityEngine::nodal_hedge(const std::vector<double>& values) const {
    return HedgeFunction{fields_.grid, values};
}

HedgeFunction SensitivityEngine::adapted_martingale_hedge() const {
    const ConditionalFields& F = fields_;
    std::vector<double> h(F.grid.n);
    const bool closed_form = opts_.p == 2.0 && !opts_.force_root_solver;
    for (std::size_t i = 0; i < F.grid.n; ++i) {
        const double start = 0.5 * (F.A[i] - F.B[i]);
        h[i] = closed_form ? start : solve_node_foc(F.grid.node(i), F.A[i], start, true, i);
    }
    return nodal_hedge(h);
}

double SensitivityEngine::adapted_M_foc_residual(const HedgeFunction& h) const {
    const ConditionalFields& F = fields_;
    std::vector<double> r(F.grid.n);
    for (std::size_t i = 0; i < F.grid.n; ++i) {
        const double x = F.grid.node(i);
        const double hv = h(x);
        r[i] = s_pow(F.A[i] - hv) - cond_s_expectation(x, hv);
    }
    return l2_mu1_norm(F.grid, F.q1, r);
}

double SensitivityEngine::adapted_Mm1_foc_residual(const HedgeFunction& h) const {
    const ConditionalFields& F = fields_;
    std::vector<double> r(F.grid.n);
    for (std::size_t i = 0; i < F.grid.n; ++i) {
        const double x = F.grid.node(i);
        r[i] = cond_s_expectation(x, h(x));
    }
    return l2_mu1_norm(F.grid, F.q1, r);
}

SensitivityReport SensitivityEngine::adapted_unconstrained() const {
    const PiecewiseLinear A{fields_.grid, fields_.A};
    std::vector<double> phi1(sample_.size()), phi2(sample_.size());
    for (std::size_t j = 0; j < sample_.size(); ++j) {
        phi1[j] = A(sample_[j].x1);
        phi2[j] = g2_[j];
    }
    const ValueEstimate v = pair_norm(phi1, phi2);
    SensitivityReport rep;
    rep.constraint = Constraint::None;
    rep.metric = Metric::Adapted;
    rep.p = opts_.p;
    rep.value = v.value;
    rep.diagnostics.mc_stderr = v.stderr_value;
    rep.diagnostics.quad_error = fields_.interp_error_estimate();
    return rep;
}

SensitivityReport SensitivityEngine::adapted_martingale() const {
    const HedgeFunction h = adapted_martingale_hedge();
    const PiecewiseLinear A{fields_.grid, fields_.A};
    std::vector<double> phi1(sample_.size()), phi2(sample_.size());
    for (std::size_t j = 0; j < sample_.size(); ++j) {
        const double hv = h(sample_[j].x1);
        phi1[j] = A(sample_[j].x1) - hv;
        phi2[j] = g2_[j] + hv;
    }
    const ValueEstimate v = pair_norm(phi1, phi2);
    SensitivityReport rep;
    rep.constraint = Constraint::M;
    rep.metric = Metric::Adapted;
    rep.p = opts_.p;
    rep.value = v.value;
    rep.h = h;
    rep.diagnostics.mc_stderr = v.stderr_value;
    rep.diagnostics.quad_error = fields_.interp_error_estimate();
    rep.diagnostics.foc_residual = adapted_M_foc_residual(h);
    if (opts_.p == 2.0) {
        // closed-form value display: E[ |E1[(d1+d2)delta]|^2/2 + |d2 delta - E1 d2 delta|^2 ]^{1/2}
        const PiecewiseLinear B{fields_.grid, fields_.B};
        RunningStat acc;
        for (std::size_t j = 0; j < sample_.size(); ++j) {
            const double ab = A(sample_[j].x1) + B(sample_[j].x1);
            const double dev = g2_[j] - B(sample_[j].x1);
            acc.add(0.5 * ab * ab + dev * dev);
        }
        const double display = std::sqrt(std::max(acc.mean(), 0.0));
        char buf[96];
        std::snprintf(buf, sizeof(buf), "closed-form display cross-check: %.10g", display);
        rep.diagnostics.notes.emplace_back(buf);
    }
    return rep;
}

SensitivityReport SensitivityEngine::adapted_marginal() const {
    const ConditionalFields& F = fields_;
    std::vector<double> fvals(F.grid.n);
    for (std::size_t i = 0; i < F.grid.n; ++i) fvals[i] = -F.A[i];
    const HedgeFunction f = nodal_hedge(fvals);
    const PiecewiseLinear A{F.grid, F.A};
    std::vector<double> phi1(sample_.size()), phi2(sample_.size());
    for (std::size_t j = 0; j < sample_.size(); ++j) {
        phi1[j] = A(sample_[j].x1) + f(sample_[j].x1);
        phi2[j] = g2_[j];
    }
    const ValueEstimate v = pair_norm(phi1, phi2);
    std::vector<double> res(F.grid.n);
    for (std::size_t i = 0; i < F.grid.n; ++i) res[i] = F.A[i] + fvals[i];
    SensitivityReport rep;
    rep.constraint = Constraint::M1;
    rep.metric = Metric::Adapted;
    rep.p = opts_.p;
    rep.value = v.value;
    rep.f = f;
    rep.diagnostics.mc_stderr = v.stderr_value;
    rep.diagnostics.quad_error = F.interp_error_estimate();
    rep.diagnostics.foc_residual = l2_mu1_norm(F.grid, F.q1, res);
    return rep;
}

SensitivityReport SensitivityEngine::adapted_martingale_marginal() const {
    const ConditionalFields& F = fields_;
    std::vector<double> hvals(F.grid.n), fvals(F.grid.n);
    const bool closed_form = opts_.p == 2.0 && !opts_.force_root_solver;
    for (std::size_t i = 0; i < F.grid.n; ++i) {
        hvals[i] = closed_form ? -F.B[i] : solve_node_foc(F.grid.node(i), 0.0, -F.B[i], false, i);
        fvals[i] = -F.A[i] + hvals[i];
    }
    const HedgeFunction h = nodal_hedge(hvals);
    const HedgeFunction f = nodal_hedge(fvals);
    const PiecewiseLinear A{F.grid, F.A};
    std::vector<double> phi1(sample_.size()), phi2(sample_.size());
    for (std::size_t j = 0; j < sample_.size(); ++j) {
        const double x1 = sample_[j].x1;
        const double hv = h(x1);
        phi1[j] = A(x1) - hv + f(x1);
        phi2[j] = g2_[j] + hv;
    }
    const ValueEstimate v = pair_norm(phi1, phi2);
    SensitivityReport rep;
    rep.constraint = Constraint::M_M1;
    rep.metric = Metric::Adapted;
    rep.p = opts_.p;
    rep.value = v.value;
    rep.h = h;
    rep.f = f;
    rep.diagnostics.mc_stderr = v.stderr_value;
    rep.diagnostics.quad_error = F.interp_error_estimate();
    rep.diagnostics.foc_residual = adapted_Mm1_foc_residual(h);
    return rep;
}

// --- standard metric ---------------------------------------------------------

SensitivityReport SensitivityEngine::wasserstein_unconstrained() const {
    const ValueEstimate v = pair_norm(g1_, g2_);
    SensitivityReport rep;
    rep.constraint = Constraint::None;
    rep.metric = Metric::Standard;
    rep.p = opts_.p;
    rep.value = v.value;
    rep.diagnostics.mc_stderr = v.stderr_value;
    return rep;
}

double SensitivityEngine::evaluate_U_M(const HedgeFunction& h) const {
    RunningStat acc;
    const bool quadratic = pprime_ == 2.0;
    for (std::size_t j = 0; j < sample_.size(); ++j) {
        const double x1 = sample_[j].x1, x2 = sample_[j].x2;
        const double hv = h(x1);
        const double psi1 = g1_[j] + h.derivative(x1) * (x2 - x1) - hv;
        const double psi2 = g2_[j] + hv;
        const double sq = psi1 * psi1 + psi2 * psi2;
        acc.add(quadratic ? sq : std::pow(sq, 0.5 * pprime_));
    }
    const double mean = acc.mean();
    return mean > 0.0 ? std::pow(mean, 1.0 / pprime_) : 0.0;
}

void SensitivityEngine::assemble_normal_system(const UniformGrid& grid, std::vector<double>& diag,
                                               std::vector<double>& off,
                                               std::vector<double>& rhs) const {
    const std::size_t n = grid.n;
    diag.assign(n, 0.0);
    off.assign(n - 1, 0.0);
    rhs.assign(n, 0.0);
    const double step = grid.step();
    for (std::size_t j = 0; j < sample_.size(); ++j) {
        const double x1 = sample_[j].x1, x2 = sample_[j].x2;
        if (x1 <= grid.lo || x1 >= grid.hi) {
            // constant extrapolation: only the boundary node is active, slope 0
            const std::size_t k = x1 <= grid.lo ? 0 : n - 1;
            diag[k] += 2.0;  // a1 = -1, a2 = 1
            rhs[k] += -g1_[j] + g2_[j];
            continue;
        }
        const std::size_t i = grid.cell_of(x1);
        const double t = (x1 - grid.node(i)) / step;
        const double dx = x2 - x1;
        const double a1_lo = -dx / step - (1.0 - t);
        const double a1_hi = dx / step - t;
        const double a2_lo = 1.0 - t;
        const double a2_hi = t;
        diag[i] += a1_lo * a1_lo + a2_lo * a2_lo;
        diag[i + 1] += a1_hi * a1_hi + a2_hi * a2_hi;
        off[i] += a1_lo * a1_hi + a2_lo * a2_hi;
        rhs[i] += g1_[j] * a1_lo + g2_[j] * a2_lo;
        rhs[i + 1] += g1_[j] * a1_hi + g2_[j] * a2_hi;
    }
    const double inv_n = 1.0 / static_cast<double>(sample_.size());
    for (double& v : diag) v *= inv_n;
    for (double& v : off) v *= inv_n;
    for (double& v : rhs) v *= inv_n;
}

std::pair<HedgeFunction, double> SensitivityEngine::direct_minimize(std::size_t grid_nodes,
                                                                    bool* ridge_used) const {
    if (opts_.p != 2.0) {
        throw std::invalid_argument("direct_minimize_U_M: requires p = 2");
    }
    if (grid_nodes < 2) throw std::invalid_argument("direct_minimize_U_M: grid needs >= 2 nodes");
    const UniformGrid grid(model_.interval_lo(), model_.interval_hi(), grid_nodes);
    std::vector<double> diag, off, b;
    assemble_normal_system(grid, diag, off, b);
    std::vector<double> neg_b(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) neg_b[i] = -b[i];
    std::vector<double> h;
    bool ridge = false;
    if (!ldlt_tridiag_solve(diag, off, neg_b, h)) {
        ridge = true;
        std::vector<double> diag_r = diag;
        for (double& v : diag_r) v += kRidge;
        if (!ldlt_tridiag_solve(diag_r, off, neg_b, h)) {
            throw std::runtime_error("direct_minimize_U_M: singular normal matrix");
        }
    }
    if (ridge_used != nullptr) *ridge_used = ridge;
    HedgeFunction hedge{grid, h};
    return {hedge, evaluate_U_M(hedge)};
}

double SensitivityEngine::direct_normal_residual(const HedgeFunction& h) const {
    std::vector<double> diag, off, b;
    assemble_normal_system(h.grid, diag, off, b);
    const std::size_t n = h.grid.n;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double r = diag[k] * h.values[k] + b[k];
        if (k > 0) r += off[k - 1] * h.values[k - 1];
        if (k + 1 < n) r += off[k] * h.values[k + 1];
        acc += r * r;
    }
    return std::sqrt(acc);
}

SensitivityReport SensitivityEngine::wasserstein_martingale() const {
    bool ridge = false;
    const auto solved = direct_minimize(fields_.grid.n, &ridge);
    const HedgeFunction& h = solved.first;
    std::vector<double> psi1(sample_.size()), psi2(sample_.size());
    for (std::size_t j = 0; j < sample_.size(); ++j) {
        const double x1 = sample_[j].x1, x2 = sample_[j].x2;
        const double hv = h(x1);
        psi1[j] = g1_[j] + h.derivative(x1) * (x2 - x1) - hv;
        psi2[j] = g2_[j] + hv;
    }
    const ValueEstimate v = pair_norm(psi1, psi2);
    SensitivityReport rep;
    rep.constraint = Constraint::M;
    rep.metric = Metric::Standard;
    rep.p = opts_.p;
    rep.value = v.value;
    rep.h = h;
    rep.diagnostics.mc_stderr = v.stderr_value;
    rep.diagnostics.quad_error = fields_.interp_error_estimate();
    rep.diagnostics.foc_residual = direct_normal_residual(h);
    rep.diagnostics.ridge_used = ridge;
    return rep;
}

// --- Fredholm route ----------------------------------------------------------

FredholmSystem SensitivityEngine::build_fredholm() const {
    if (opts_.p != 2.0) throw std::invalid_argument("build_fredholm_system: requires p = 2");
    const ConditionalFields& F = fields_;
    const std::size_t n = F.grid.n;
    FredholmSystem sys;
    sys.grid = F.grid;
    sys.gamma1 = F.gamma1;
    sys.gamma2 = F.gamma2;
    sys.q1 = F.q1;
    // v2 is the density-weighted conditional second moment q1(x) E1[(X2-X1)^2];
    // it is the integrating factor of the flux q1*(gamma1 + sigma2*h'), so the
    // marginal density must be folded in here, not just the conditional variance.
    sys.v2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        sys.v2[i] = F.q1[i] * F.sigma2[i];
        if (!(sys.v2[i] > 0.0)) {
            throw std::runtime_error(
                "build_fredholm_system: nonpositive weighted conditional variance");
        }
    }
    std::vector<double> inv_v2(n);
    for (std::size_t i = 0; i < n; ++i) inv_v2[i] = 1.0 / sys.v2[i];
    sys.k = cumtrapz(F.grid, inv_v2);

    const std::vector<double> w = F.grid.trapezoid_weights();
    sys.kernel.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            sys.kernel[i][j] = 2.0 * w[j] * sys.q1[j] * (sys.k[i] - sys.k[j]);
        }
    }

    std::vector<double> g2q(n), integ(n);
    for (std::size_t i = 0; i < n; ++i) g2q[i] = sys.gamma2[i] * sys.q1[i];
    const std::vector<double> inner = cumtrapz(F.grid, g2q);
    for (std::size_t i = 0; i < n; ++i) {
        integ[i] = (-sys.q1[i] * sys.gamma1[i] + inner[i]) * inv_v2[i];
    }
    sys.u = cumtrapz(F.grid, integ);

    sys.phi0 = forward_solve(sys.kernel, std::vector<double>(n, 1.0));
    sys.phi1 = forward_solve(sys.kernel, sys.k);
    return sys;
}

std::pair<HedgeFunction, double> SensitivityEngine::solve_fredholm(FredholmSystem& sys) const {
    const std::size_t n = sys.grid.n;
    sys.psi = forward_solve(sys.kernel, sys.u);

    const HedgeFunction H0{sys.grid, sys.phi0};
    const HedgeFunction H1{sys.grid, sys.phi1};
    const HedgeFunction Hp{sys.grid, sys.psi};
    RunningStat a0s, a1s, aps, b0s, b1s, bps, r1s, r2s;
    for (std::size_t j = 0; j < sample_.size(); ++j) {
        const double x1 = sample_[j].x1, x2 = sample_[j].x2;
        const double dx2 = (x2 - x1) * (x2 - x1);
        a0s.add(2.0 * H0(x1));
        a1s.add(2.0 * H1(x1));
        aps.add(2.0 * Hp(x1));
        b0s.add(dx2 * H0.derivative(x1) + 2.0 * x1 * H0(x1));
        b1s.add(dx2 * H1.derivative(x1) + 2.0 * x1 * H1(x1));
        bps.add(dx2 * Hp.derivative(x1) + 2.0 * x1 * Hp(x1));
        r1s.add(g1_[j] - g2_[j]);
        r2s.add(x1 * (g1_[j] - g2_[j]) - (x2 - x1) * g1_[j]);
    }
    sys.a0 = a0s.mean();
    sys.a1 = a1s.mean();
    sys.b0 = b0s.mean();
    sys.b1 = b1s.mean();
    const double rhs1 = r1s.mean() - aps.mean();
    const double rhs2 = r2s.mean() - bps.mean();
    sys.det = sys.a0 * sys.b1 - sys.a1 * sys.b0;
    const double scale = std::abs(sys.a0 * sys.b1) + std::abs(sys.a1 * sys.b0) + 1e-300;
    if (std::abs(sys.det) <= 1e-12 * scale) {
        throw std::runtime_error(
            "solve_fredholm_hedge: degenerate moment system (a0*b1 - a1*b0 = 0)");
    }
    sys.c0 = (rhs1 * sys.b1 - sys.a1 * rhs2) / sys.det;
    sys.c1 = (sys.a0 * rhs2 - rhs1 * sys.b0) / sys.det;

    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) {
        h[i] = sys.c0 * sys.phi0[i] + sys.c1 * sys.phi1[i] + sys.psi[i];
    }
    HedgeFunction hedge{sys.grid, h};
    return {hedge, evaluate_U_M(hedge)};
}

double fredholm_residual(const HedgeFunction& h, const FredholmSystem& sys) {
    const std::size_t n = sys.grid.n;
    if (n < 3) return 0.0;
    std::vector<double> hv(n), integrand(n);
    for (std::size_t i = 0; i < n; ++i) {
        hv[i] = h(sys.grid.node(i));
        integrand[i] = (sys.gamma2[i] + 2.0 * hv[i]) * sys.q1[i];
    }
    const std::vector<double> cum = cumtrapz(sys.grid, integrand);
    const double step = sys.grid.step();
    double mmax = -1e300, mmin = 1e300;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hprime = (hv[i + 1] - hv[i - 1]) / (2.0 * step);
        const double m = hprime * sys.v2[i] + sys.q1[i] * sys.gamma1[i] - cum[i];
        mmax = std::max(mmax, m);
        mmin = std::min(mmin, m);
    }
    return 0.5 * (mmax - mmin);
}

// --- dispatch / scenario support ----------------------------------------------

SensitivityEngine::Hedges SensitivityEngine::resolve_hedges(Constraint c, Metric m) const {
    Hedges out;
    if (m == Metric::Standard) {
        if (c == Constraint::M1 || c == Constraint::M_M1) {
            throw std::invalid_argument(
                "standard-metric sensitivities support constraints none and M only");
        }
        if (c == Constraint::M) {
            out.has_h = true;
            out.h = direct_minimize(fields_.grid.n, &out.ridge_used).first;
            out.foc_residual = direct_normal_residual(out.h);
        }
        return out;
    }
    switch (c) {
        case Constraint::None:
            break;
        case Constraint::M:
            out.has_h = true;
            out.h = adapted_martingale_hedge();
            out.foc_residual = adapted_M_foc_residual(out.h);
            break;
        case Constraint::M1: {
            std::vector<double> fvals(fields_.grid.n);
            for (std::size_t i = 0; i < fields_.grid.n; ++i) fvals[i] = -fields_.A[i];
            out.has_f = true;
            out.f = nodal_hedge(fvals);
            break;
        }
        case Constraint::M_M1: {
            const bool closed_form = opts_.p == 2.0 && !opts_.force_root_solver;
            std::vector<double> hvals(fields_.grid.n), fvals(fields_.grid.n);
            for (std::size_t i = 0; i < fields_.grid.n; ++i) {
                hvals[i] = closed_form
                               ? -fields_.B[i]
                               : solve_node_foc(fields_.grid.node(i), 0.0, -fields_.B[i], false, i);
                fvals[i] = -fields_.A[i] + hvals[i];
            }
            out.has_h = true;
            out.has_f = true;
            out.h = nodal_hedge(hvals);
            out.f = nodal_hedge(fvals);
            out.foc_residual = adapted_Mm1_foc_residual(out.h);
            break;
        }
    }
    return out;
}

SensitivityReport SensitivityEngine::report_for(Constraint c, Metric m) const {
    if (m == Metric::Adapted) {
        switch (c) {
            case Constraint::None: return adapted_unconstrained();
            case Constraint::M: return adapted_martingale();
            case Constraint::M1: return adapted_marginal();
            case Constraint::M_M1: return adapted_martingale_marginal();
        }
    }
    switch (c) {
        case Constraint::None: return wasserstein_unconstrained();
        case Constraint::M: return wasserstein_martingale();
        default:
            throw std::invalid_argument(
                "standard-metric sensitivities support constraints none and M only");
    }
}

DirectionSpec SensitivityEngine::direction_spec(Constraint c, Metric m) const {
    const Hedges hedges = resolve_hedges(c, m);
    const PiecewiseLinear A{fields_.grid, fields_.A};
    const CriterionContext* ctx = &ctx_;
    DirectionSpec spec;
    spec.pprime = pprime_;
    spec.per_block = m == Metric::Adapted;
    if (m == Metric::Standard) {
        if (c == Constraint::None) {
            spec.phi = [ctx](double x1, double x2) { return ctx->grad(x1, x2); };
        } else {
            const HedgeFunction h = hedges.h;
            spec.phi = [ctx, h](double x1, double x2) {
                const auto g = ctx->grad(x1, x2);
                const double hv = h(x1);
                return std::make_pair(g.first + h.derivative(x1) * (x2 - x1) - hv,
                                      g.second + hv);
            };
        }
    } else {
        switch (c) {
            case Constraint::None:
                spec.phi = [ctx, A](double x1, double x2) {
                    return std::make_pair(A(x1), ctx->grad(x1, x2).second);
                };
                break;
            case Constraint::M: {
                const HedgeFunction h = hedges.h;
                spec.phi = [ctx, A, h](double x1, double x2) {
                    const double hv = h(x1);
                    return std::make_pair(A(x1) - hv, ctx->grad(x1, x2).second + hv);
                };
                break;
            }
            case Constraint::M1:
                spec.phi = [ctx](double x1, double x2) {
                    return std::make_pair(0.0, ctx->grad(x1, x2).second);
                };
                break;
            case Constraint::M_M1: {
                const HedgeFunction h = hedges.h;
                spec.phi = [ctx, h](double x1, double x2) {
                    return std::make_pair(0.0, ctx->grad(x1, x2).second + h(x1));
                };
                break;
            }
        }
    }
    // per-block (adapted) directions normalize in the blockwise l^{p'} norm,
    // joint (standard) ones in the pair-Euclidean norm; identical at p = 2.
    RunningStat acc;
    const bool quadratic = pprime_ == 2.0;
    for (const SamplePoint& s : sample_) {
        const auto blocks = spec.phi(s.x1, s.x2);
        if (quadratic) {
            acc.add(blocks.first * blocks.first + blocks.second * blocks.second);
        } else if (spec.per_block) {
            acc.add(std::pow(std::abs(blocks.first), pprime_) +
                    std::pow(std::abs(blocks.second), pprime_));
        } else {
            const double sq = blocks.first * blocks.first + blocks.second * blocks.second;
            acc.add(std::pow(sq, 0.5 * pprime_));
        }
    }
    const double mean = acc.mean();
    spec.norm = mean > 0.0 ? std::pow(mean, 1.0 / pprime_) : 0.0;
    return spec;
}

}  // namespace mrh
