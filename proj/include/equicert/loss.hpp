#pragma once

#include <string>

namespace equicert {

enum class LossKind { squared, squared_clipped, zero_one, logistic_normalized };

// Loss with declared analytic properties.  The flags are load-bearing:
// certificate code refuses losses without bounded01, and the convexity flag
// is spot-checked by tests (within convex_halfwidth of the target, since no
// nonconstant loss is both convex on all of R and bounded).
struct LossFn {
    LossKind kind = LossKind::squared;
    bool convex_in_first = false;
    bool g_invariant = false;  // under the trivial output action: always
    bool bounded01 = false;
    // Convexity in the first argument holds for |prediction - target| up to
    // this value (infinity = globally convex).
    double convex_halfwidth = 0.0;

    static LossFn make(LossKind kind);
    static LossFn parse(const std::string& name);

    double operator()(double y_hat, double y) const;
    // d/dy_hat; subgradient 0 at kinks, and 0 for the non-differentiable
    // zero_one (optimizers must reject it instead).
    double grad(double y_hat, double y) const;
    bool differentiable() const { return kind != LossKind::zero_one; }
    const char* name() const;
};

}  // namespace equicert
