#include "multiface/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "multiface/errors.hpp"

namespace multiface {

CapMode parse_cap_mode(std::string_view text) {
    if (text == "paper") return CapMode::paper;
    if (text == "exact-cap") return CapMode::exact_cap;
    throw ValueError("unknown_mode", "unknown capacity mode '" + std::string(text) + "'");
}

std::string_view to_string(CapMode mode) { return mode == CapMode::paper ? "paper" : "exact-cap"; }

void CapacityQuery::validate() const {
    if (n < 2) throw ValueError("capacity query needs n >= 2");
    // cos(theta/4) must be interior to (-1, 1).
    if (!(theta > 0.0 && theta < 4.0 * std::numbers::pi)) throw ValueError("theta must be in (0, 4*pi)");
}

double log_sphere_surface_area(std::size_t n) {
    if (n < 1) throw ValueError("sphere dimension n must be >= 1");
    const double half = static_cast<double>(n) / 2.0;
    return std::log(2.0) + half * std::log(std::numbers::pi) - std::lgamma(half);
}

namespace {

struct Simpson {
    double (*f)(double, const void*);
    const void* ctx;
    double worst_error = 0.0;

    double eval(double u) const { return f(u, ctx); }

    double adapt(double a, double b, double fa, double fm, double fb, double whole, double eps, int depth) {
        const double m = (a + b) / 2.0;
        const double lm = (a + m) / 2.0, rm = (m + b) / 2.0;
        const double flm = eval(lm), frm = eval(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double delta = left + right - whole;
        if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
        if (depth >= kQuadratureMaxDepth) {
            worst_error = std::max(worst_error, std::abs(delta) / 15.0);
            return left + right + delta / 15.0;
        }
        return adapt(a, m, fa, flm, fm, left, eps / 2.0, depth + 1) +
               adapt(m, b, fm, frm, fb, right, eps / 2.0, depth + 1);
    }
};

// With x = 1 - u^2 the integral of (1 - x^2)^p over [c, 1] becomes the
// integral over [0, sqrt(1 - c)] of 2 u^(2p+1) (2 - u^2)^p, smooth at u = 0.
struct CapIntegrand {
    double p;
    double log_ref;

    double log_value(double u) const {
        if (u <= 0.0) return 2.0 * p + 1.0 > 0.0 ? -INFINITY : std::log(2.0) + p * std::log(2.0);
        return std::log(2.0) + (2.0 * p + 1.0) * std::log(u) + p * std::log(2.0 - u * u);
    }
    static double scaled(double u, const void* self) {
        const auto* c = static_cast<const CapIntegrand*>(self);
        return std::exp(c->log_value(u) - c->log_ref);
    }
};

}  // namespace

double log_cap_integral(std::size_t n, double theta, CapMode mode) {
    CapacityQuery{n, theta}.validate();
    const double p = mode == CapMode::paper ? (static_cast<double>(n) - 2.0) / 2.0
                                            : (static_cast<double>(n) - 3.0) / 2.0;
    const double lower = std::cos(theta / 4.0);
    const double upper_u = std::sqrt(1.0 - lower);

    CapIntegrand integrand{p, 0.0};
    // Scale by the largest sampled value so the integrand stays near 1.
    constexpr int kPanels = 64;
    double log_ref = -INFINITY;
    for (int i = 0; i <= 4 * kPanels; ++i) {
        log_ref = std::max(log_ref, integrand.log_value(upper_u * i / (4.0 * kPanels)));
    }
    integrand.log_ref = log_ref;

    Simpson simpson{&CapIntegrand::scaled, &integrand};
    const double h = upper_u / kPanels;
    double coarse = 0.0;
    for (int i = 0; i < kPanels; ++i) {
        const double a = i * h, b = (i + 1) * h;
        coarse += h / 6.0 * (simpson.eval(a) + 4.0 * simpson.eval((a + b) / 2.0) + simpson.eval(b));
    }
    const double eps = kQuadratureRelTol * coarse;
    double total = 0.0;
    for (int i = 0; i < kPanels; ++i) {
        const double a = i * h, b = (i + 1) * h;
        const double fa = simpson.eval(a), fm = simpson.eval((a + b) / 2.0), fb = simpson.eval(b);
        const double whole = h / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson.adapt(a, b, fa, fm, fb, whole, eps / kPanels, 0);
    }
    if (simpson.worst_error > eps || !(total > 0.0) || !std::isfinite(total)) {
        std::ostringstream msg;
        msg << "cap quadrature did not reach relative tolerance " << kQuadratureRelTol << " (achieved "
            << simpson.worst_error / std::max(total, 1e-300) << ") for n=" << n << " theta=" << theta;
        throw NumericError("quadrature_not_converged", msg.str());
    }
    return log_ref + std::log(total);
}

double log_cap_area(std::size_t n, double theta, CapMode mode) {
    return log_sphere_surface_area(n - 1) + log_cap_integral(n, theta, mode);
}

CapacityResult max_points(const CapacityQuery& query, CapMode mode) {
    query.validate();
    CapacityResult r;
    r.log_sphere_area = log_sphere_surface_area(query.n);
    r.log_cap_area = log_cap_area(query.n, query.theta, mode);
    r.log_m_star = r.log_sphere_area - r.log_cap_area;
    r.m_star_decimal_exponent = r.log_m_star / std::numbers::ln10;
    return r;
}

}  // namespace multiface
