#include "equicert/loss.hpp"

#include "equicert/common.hpp"

#include <cmath>
#include <limits>

namespace equicert {

LossFn LossFn::make(LossKind kind) {
    LossFn l;
    l.kind = kind;
    l.g_invariant = true;  // outputs carry the trivial action
    switch (kind) {
        case LossKind::squared:
            l.convex_in_first = true;
            l.bounded01 = false;
            l.convex_halfwidth = std::numeric_limits<double>::infinity();
            break;
        case LossKind::squared_clipped:
            l.convex_in_first = true;
            l.bounded01 = true;
            l.convex_halfwidth = 1.0;  // flat beyond the clip, convex inside
            break;
        case LossKind::zero_one:
            l.convex_in_first = false;
            l.bounded01 = true;
            break;
        case LossKind::logistic_normalized:
            l.convex_in_first = false;  // sigmoid of the margin saturates
            l.bounded01 = true;
            break;
    }
    return l;
}

LossFn LossFn::parse(const std::string& name) {
    if (name == "squared") return make(LossKind::squared);
    if (name == "squared-clipped") return make(LossKind::squared_clipped);
    if (name == "zero-one") return make(LossKind::zero_one);
    if (name == "logistic-normalized") return make(LossKind::logistic_normalized);
    throw ConfigError("unknown loss '" + name + "'");
}

const char* LossFn::name() const {
    switch (kind) {
        case LossKind::squared: return "squared";
        case LossKind::squared_clipped: return "squared-clipped";
        case LossKind::zero_one: return "zero-one";
        case LossKind::logistic_normalized: return "logistic-normalized";
    }
    return "?";
}

double LossFn::operator()(double y_hat, double y) const {
    switch (kind) {
        case LossKind::squared: {
            const double d = y_hat - y;
            return d * d;
        }
        case LossKind::squared_clipped: {
            const double d = y_hat - y;
            return std::min(d * d, 1.0);
        }
        case LossKind::zero_one: {
            const double sy = y >= 0.0 ? 1.0 : -1.0;
            const double sh = y_hat >= 0.0 ? 1.0 : -1.0;
            return sy == sh ? 0.0 : 1.0;
        }
        case LossKind::logistic_normalized:
            // Sigmoid of the (negated) margin: 0 when confidently right,
            // 1 when confidently wrong, 1/2 on the boundary.
            return 1.0 / (1.0 + std::exp(y * y_hat));
    }
    return 0.0;
}

double LossFn::grad(double y_hat, double y) const {
    switch (kind) {
        case LossKind::squared:
            return 2.0 * (y_hat - y);
        case LossKind::squared_clipped: {
            const double d = y_hat - y;
            return d * d >= 1.0 ? 0.0 : 2.0 * d;
        }
        case LossKind::zero_one:
            return 0.0;
        case LossKind::logistic_normalized: {
            const double s = 1.0 / (1.0 + std::exp(y * y_hat));
            return -y * s * (1.0 - s);
        }
    }
    return 0.0;
}

}  // namespace equicert
