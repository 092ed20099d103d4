#pragma once

#include <vector>

#include "mrh/criterion.hpp"
#include "mrh/grid.hpp"
#include "mrh/model.hpp"

namespace mrh {

// Conditional-expectation fields of a criterion under a model, tabulated on
// the marginal grid of I.  All downstream sensitivity formulas are built from
// these together with pointwise gradient evaluations:
//   A      = E1[ d1 delta ]            B      = E1[ d2 delta ]
//   gamma1 = E1[ (X2 - x1) d1 delta ]  gamma2 = B - A
//   sigma2 = E1[ (X2 - x1)^2 ]         vp     = q1 * E1[ |X2 - x1|^{p'} ]
struct ConditionalFields {
    UniformGrid grid;
    double pprime = 2.0;
    std::vector<double> A;
    std::vector<double> B;
    std::vector<double> gamma1;
    std::vector<double> gamma2;
    std::vector<double> sigma2;
    std::vector<double> q1;
    std::vector<double> vp;

    // Clamped linear interpolation of a nodal table at x1.
    double interp(const std::vector<double>& table, double x1) const;

    // Piecewise-linear interpolation error estimate from second differences.
    double interp_error_estimate() const;
};

ConditionalFields build_conditional_fields(const CriterionContext& ctx, double pprime);

}  // namespace mrh
