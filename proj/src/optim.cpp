#include "carnot/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace carnot::optim {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

} // namespace

NelderMeadResult nelder_mead(const Objective& f, const std::vector<double>& x0,
                             const NelderMeadOptions& opts) {
    const std::size_t n = x0.size();
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    std::vector<std::vector<double>> verts(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) {
        double step = opts.init_scale;
        if (x0[i] != 0.0) step = opts.init_scale * std::fabs(x0[i]) + opts.init_scale;
        verts[i + 1][i] += step;
    }
    std::vector<double> fv(n + 1);
    int evals = 0;
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(verts[i]), ++evals;

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    while (evals < opts.max_evals) {
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order[0], worst = order[n];
        const std::size_t second_worst = order[n - 1];

        double diam = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                diam = std::max(diam,
                                std::fabs(verts[order[i]][j] - verts[best][j]));
        if (std::fabs(fv[worst] - fv[best]) <= opts.f_tol && diam <= opts.x_tol) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += verts[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        for (std::size_t j = 0; j < n; ++j)
            xr[j] = centroid[j] + alpha * (centroid[j] - verts[worst][j]);
        const double fr = f(xr);
        ++evals;

        if (fr < fv[best]) {
            for (std::size_t j = 0; j < n; ++j)
                xe[j] = centroid[j] + gamma * (xr[j] - centroid[j]);
            const double fe = f(xe);
            ++evals;
            if (fe < fr) {
                verts[worst] = xe;
                fv[worst] = fe;
            } else {
                verts[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second_worst]) {
            verts[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        const bool outside = fr < fv[worst];
        const std::vector<double>& base = outside ? xr : verts[worst];
        for (std::size_t j = 0; j < n; ++j)
            xc[j] = centroid[j] + rho * (base[j] - centroid[j]);
        const double fc = f(xc);
        ++evals;
        if (fc < (outside ? fr : fv[worst])) {
            verts[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j)
                verts[i][j] = verts[best][j] + sigma * (verts[i][j] - verts[best][j]);
            fv[i] = f(verts[i]);
            ++evals;
            if (evals >= opts.max_evals) break;
        }
    }

    std::size_t ib = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[ib]) ib = i;
    return {verts[ib], fv[ib], evals};
}

LbfgsResult lbfgs(const Objective& f, const GradObjective& fg,
                  const std::vector<double>& x0, const LbfgsOptions& opts) {
    const std::size_t n = x0.size();
    std::vector<double> x = x0, g(n), xn(n), gn(n);
    double fx = fg(x, g);

    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;

    int it = 0;
    for (; it < opts.max_iters; ++it) {
        if (norm(g) <= opts.g_tol * std::max(1.0, norm(x))) break;

        // Two-loop recursion.
        std::vector<double> q = g;
        const int m = static_cast<int>(s_hist.size());
        std::vector<double> a(m);
        for (int i = m - 1; i >= 0; --i) {
            a[i] = rho_hist[i] * dot(s_hist[i], q);
            for (std::size_t j = 0; j < n; ++j) q[j] -= a[i] * y_hist[i][j];
        }
        double scale = 1.0;
        if (m > 0) {
            const double yy = dot(y_hist[m - 1], y_hist[m - 1]);
            if (yy > 0) scale = dot(s_hist[m - 1], y_hist[m - 1]) / yy;
        }
        for (double& v : q) v *= scale;
        for (int i = 0; i < m; ++i) {
            const double b = rho_hist[i] * dot(y_hist[i], q);
            for (std::size_t j = 0; j < n; ++j) q[j] += (a[i] - b) * s_hist[i][j];
        }
        // q is now the ascent direction estimate H*g; descend along -q.
        double dg = -dot(q, g);
        if (dg >= 0) {
            q = g;
            dg = -dot(g, g);
        }

        double t = 1.0;
        const double c1 = 1e-4;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t j = 0; j < n; ++j) xn[j] = x[j] - t * q[j];
            const double fn = f(xn);
            if (std::isfinite(fn) && fn <= fx + c1 * t * dg) {
                accepted = true;
                fg(xn, gn);
                // Update history.
                std::vector<double> s(n), yv(n);
                for (std::size_t j = 0; j < n; ++j) {
                    s[j] = xn[j] - x[j];
                    yv[j] = gn[j] - g[j];
                }
                const double sy = dot(s, yv);
                if (sy > 1e-12 * norm(s) * norm(yv)) {
                    s_hist.push_back(std::move(s));
                    y_hist.push_back(std::move(yv));
                    rho_hist.push_back(1.0 / sy);
                    if (static_cast<int>(s_hist.size()) > opts.history) {
                        s_hist.erase(s_hist.begin());
                        y_hist.erase(y_hist.begin());
                        rho_hist.erase(rho_hist.begin());
                    }
                }
                x = xn;
                g = gn;
                fx = fn;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
    }
    return {x, fx, it};
}

GradObjective fd_gradient(const Objective& f, double step) {
    return [f, step](const std::vector<double>& x, std::vector<double>& g) {
        const double fx = f(x);
        std::vector<double> xp = x;
        g.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double h = step * std::max(1.0, std::fabs(x[i]));
            xp[i] = x[i] + h;
            const double fp = f(xp);
            xp[i] = x[i] - h;
            const double fm = f(xp);
            xp[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        return fx;
    };
}

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                           31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

double radical_inverse(std::uint64_t i, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

} // namespace

std::vector<double> halton(std::uint64_t index, int dim) {
    std::vector<double> p(dim);
    for (int d = 0; d < dim; ++d) p[d] = radical_inverse(index, kPrimes[d % 20]);
    return p;
}

double norminv(double u) {
    // Acklam's approximation, ~1e-9 absolute accuracy.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    u = std::clamp(u, 1e-300, 1.0 - 1e-16);
    if (u < plow) {
        const double q = std::sqrt(-2.0 * std::log(u));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (u > phigh) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - u));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = u - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

std::vector<double> ball_point(std::uint64_t index, int dim, double radius) {
    std::vector<double> u = halton(index, dim + 1);
    std::vector<double> x(dim);
    double nrm2 = 0.0;
    for (int d = 0; d < dim; ++d) {
        x[d] = norminv(u[d + 1]);
        nrm2 += x[d] * x[d];
    }
    const double nrm = std::sqrt(nrm2);
    const double r =
        radius * std::pow(std::max(u[0], 1e-300), 1.0 / static_cast<double>(dim));
    if (nrm == 0.0) return std::vector<double>(dim, 0.0);
    for (double& v : x) v *= r / nrm;
    return x;
}

} // namespace carnot::optim
