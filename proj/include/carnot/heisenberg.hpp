#pragma once

#include <array>

#include "carnot/group.hpp"

namespace carnot::heis {

/// mu(s) = (2s - sin 2s) / (2 sin^2 s), the increasing diffeomorphism of
/// (-pi, pi) onto R that drives the closed-form distance. Series branch
/// below |s| = 1e-4; the cancellation-prone numerator is summed by series
/// for moderate |s| so both branches agree to ~1e-16 at the seam.
double mu(double s);

/// mu'(s) = 2 (sin s - s cos s) / sin^3 s  > 0 on (-pi, pi).
double mu_prime(double s);

struct MuInversion {
    double value = 0.0;  // in (-pi, pi)
    double input = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

/// Monotone bisection bracketed in (-pi, pi), polished by Newton steps.
/// Residual <= 1e-12 * max(1, |v|).
MuInversion mu_inverse(double v);

/// Squared distance to the identity: ((theta/sin theta)^2)(x^2+y^2) off the
/// z-axis with theta = mu^{-1}(4|z|/(x^2+y^2)); 4 pi |z| on the axis.
double d0_squared_exact(double x, double y, double z);
double d0_squared_exact(const Point& p);
double d0_exact(const Point& p);

struct HessianBundle {
    double theta = 0.0;
    std::array<double, 3> euclidean_grad{};
    std::array<std::array<double, 3>, 3> euclidean_hess{};
    std::array<double, 2> horizontal_grad{};
    std::array<std::array<double, 2>, 2> horizontal_hess{};
};

/// Full first and second derivatives of d0^2 at an off-axis point, plus the
/// contractions along the left-invariant frame. Throws non_smooth_locus on
/// the z-axis where the corner forbids classical derivatives.
HessianBundle derivatives(const Point& p);

} // namespace carnot::heis
