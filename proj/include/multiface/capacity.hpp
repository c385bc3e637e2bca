#pragma once

#include <string_view>

namespace multiface {

/// How many well-separated points fit on the unit sphere in R^n: the sphere
/// area divided by the area of one cap of angular radius theta/4. All values
/// are natural logs; the quantities overflow doubles for moderate n.
enum class CapMode {
    paper,      // cap integrand (1 - x^2)^((n-2)/2)
    exact_cap,  // exact hyperspherical cap, (1 - x^2)^((n-3)/2)
};

CapMode parse_cap_mode(std::string_view text);
std::string_view to_string(CapMode mode);

struct CapacityQuery {
    std::size_t n = 128;
    double theta = 1.0471975511965976;  // pi/3

    void validate() const;
};

struct CapacityResult {
    double log_sphere_area = 0.0;
    double log_cap_area = 0.0;
    double log_m_star = 0.0;
    double m_star_decimal_exponent = 0.0;  // log10 m*
};

inline constexpr double kQuadratureRelTol = 1e-10;
inline constexpr int kQuadratureMaxDepth = 60;

/// log(2 pi^(n/2) / Gamma(n/2)) via lgamma.
double log_sphere_surface_area(std::size_t n);

/// log of the integral over [cos(theta/4), 1] of (1 - x^2)^exponent.
double log_cap_integral(std::size_t n, double theta, CapMode mode = CapMode::paper);

/// log(S_{n-1}) + log_cap_integral.
double log_cap_area(std::size_t n, double theta, CapMode mode = CapMode::paper);

CapacityResult max_points(const CapacityQuery& query, CapMode mode = CapMode::paper);

}  // namespace multiface
