#include "carnot/heisenberg.hpp"

#include <cmath>

namespace carnot::heis {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSeriesCut = 1e-4;
constexpr double kSumCut = 0.45; // below this, sum the numerators by series

void require_domain(double s) {
    if (!(std::fabs(s) < kPi))
        throw domain_error("mu: argument outside (-pi, pi)");
}

// u - sin u, summed by series for small u to avoid cancellation.
double x_minus_sin(double u) {
    if (std::fabs(u) >= 2.0 * kSumCut) return u - std::sin(u);
    const double u2 = u * u;
    double term = u * u2 / 6.0, sum = term;
    for (int k = 2; k <= 12; ++k) {
        term *= -u2 / ((2.0 * k) * (2.0 * k + 1.0));
        sum += term;
        if (std::fabs(term) < 1e-20 * std::fabs(sum)) break;
    }
    return sum;
}

// sin s - s cos s, series for small s.
double sin_minus_scos(double s) {
    if (std::fabs(s) >= kSumCut) return std::sin(s) - s * std::cos(s);
    const double s2 = s * s;
    double term = s * s2 / 3.0, sum = term;
    for (int k = 1; k <= 12; ++k) {
        term *= -s2 * (k + 1.0) / (k * (2.0 * k + 2.0) * (2.0 * k + 3.0));
        sum += term;
        if (std::fabs(term) < 1e-20 * std::fabs(sum)) break;
    }
    return sum;
}

// theta * cot(theta), with the removable singularity at 0 filled in.
double theta_cot(double t) {
    if (std::fabs(t) < kSeriesCut) {
        const double t2 = t * t;
        return 1.0 - t2 / 3.0 - t2 * t2 / 45.0;
    }
    return t * std::cos(t) / std::sin(t);
}

} // namespace

double mu(double s) {
    if (!std::isfinite(s)) throw domain_error("mu: non-finite argument");
    require_domain(s);
    if (std::fabs(s) < kSeriesCut) {
        const double s2 = s * s;
        return s * (2.0 / 3.0 + s2 * (4.0 / 45.0 + s2 * (4.0 / 315.0)));
    }
    const double sn = std::sin(s);
    return x_minus_sin(2.0 * s) / (2.0 * sn * sn);
}

double mu_prime(double s) {
    if (!std::isfinite(s)) throw domain_error("mu_prime: non-finite argument");
    require_domain(s);
    if (std::fabs(s) < kSeriesCut) {
        const double s2 = s * s;
        return 2.0 / 3.0 + s2 * (4.0 / 15.0 + s2 * (4.0 / 63.0));
    }
    const double sn = std::sin(s);
    return 2.0 * sin_minus_scos(s) / (sn * sn * sn);
}

MuInversion mu_inverse(double v) {
    if (!std::isfinite(v)) throw domain_error("mu_inverse: non-finite input");
    MuInversion out;
    out.input = v;
    if (v == 0.0) return out;

    const double sign = v > 0.0 ? 1.0 : -1.0;
    const double target = std::fabs(v);
    const double tol = 1e-12 * std::max(1.0, target);
    int iters = 0;

    // Bracket [lo, hi] with mu(hi) >= target; mu(pi - e) ~ pi / e^2 guides
    // how close to pi we must creep. hi never reaches pi itself.
    const double hi_max = std::nextafter(kPi, 0.0);
    double lo = 0.0;
    double eps = std::min(1.0, std::sqrt(kPi / std::max(target, 1.0)));
    double hi = std::min(kPi - eps, hi_max);
    while (mu(hi) < target) {
        ++iters;
        eps *= 0.25;
        hi = kPi - eps;
        if (hi >= hi_max) {
            hi = hi_max;
            break;
        }
    }

    for (int i = 0; i < 200; ++i) {
        ++iters;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (mu(mid) < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-9) break; // switch to Newton once safely local
    }
    double t = 0.5 * (lo + hi);
    double r = mu(t) - target;
    for (int i = 0; i < 8 && std::fabs(r) > 0.25 * tol; ++i) {
        ++iters;
        const double step = r / mu_prime(t);
        double tn = t - step;
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        const double rn = mu(tn) - target;
        if (rn < 0.0)
            lo = tn;
        else
            hi = tn;
        t = tn;
        r = rn;
    }

    out.value = sign * t;
    out.iterations = iters;
    out.residual = std::fabs(r);
    return out;
}

double d0_squared_exact(double x, double y, double z) {
    const double r2 = x * x + y * y;
    if (r2 == 0.0) return 4.0 * kPi * std::fabs(z);
    if (z == 0.0) return r2;
    const double v = 4.0 * std::fabs(z) / r2;
    if (v >= 1e14) {
        // theta = pi - eps with eps = sqrt(pi/v): the closed form reduces to
        // 4|z| (pi - 2 eps + eps^2/pi) + O(eps^3), which stays accurate where
        // sin(theta) itself no longer can.
        const double eps = std::sqrt(kPi / v);
        return 4.0 * std::fabs(z) * (kPi - 2.0 * eps + eps * eps / kPi);
    }
    const double theta = mu_inverse(v).value;
    const double ratio = theta < kSeriesCut
                             ? 1.0 + theta * theta / 6.0 // theta / sin(theta)
                             : theta / std::sin(theta);
    return ratio * ratio * r2;
}

double d0_squared_exact(const Point& p) {
    check_point(registry("heisenberg"), p, "d0_squared_exact");
    return d0_squared_exact(p[0], p[1], p[2]);
}

double d0_exact(const Point& p) { return std::sqrt(d0_squared_exact(p)); }

HessianBundle derivatives(const Point& p) {
    check_point(registry("heisenberg"), p, "derivatives");
    const double x = p[0], y = p[1], z = p[2];
    const double r2 = x * x + y * y;
    if (r2 == 0.0)
        throw non_smooth_locus(
            "derivatives: point on the z-axis (corner of d0^2)");

    HessianBundle out;
    // Signed theta makes every formula below valid for either sign of z.
    const double theta = mu_inverse(4.0 * z / r2).value;
    out.theta = theta;

    const double tct = theta_cot(theta);
    const double m = mu(theta);
    const double mp = mu_prime(theta);

    const double gx = 2.0 * tct * x;
    const double gy = 2.0 * tct * y;
    const double gz = 4.0 * theta;
    out.euclidean_grad = {gx, gy, gz};

    const double w = 1.0 / (r2 * mp);
    const double dxx = 2.0 * tct + 4.0 * x * x * m * m * w;
    const double dyy = 2.0 * tct + 4.0 * y * y * m * m * w;
    const double dxy = 4.0 * x * y * m * m * w;
    const double dxz = -8.0 * x * m * w;
    const double dyz = -8.0 * y * m * w;
    const double dzz = 16.0 * w;
    out.euclidean_hess = {{{dxx, dxy, dxz}, {dxy, dyy, dyz}, {dxz, dyz, dzz}}};

    // Contractions along X1 = dx - (y/2) dz, X2 = dy + (x/2) dz.
    out.horizontal_grad = {gx - 0.5 * y * gz, gy + 0.5 * x * gz};
    const double h11 = dxx - y * dxz + 0.25 * y * y * dzz;
    const double h22 = dyy + x * dyz + 0.25 * x * x * dzz;
    const double h12 =
        dxy + 0.5 * x * dxz - 0.5 * y * dyz - 0.25 * x * y * dzz;
    out.horizontal_hess = {{{h11, h12}, {h12, h22}}};
    return out;
}

} // namespace carnot::heis
