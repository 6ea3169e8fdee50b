#include "carnot/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>

#include "json.hpp"

#include "carnot/heisenberg.hpp"
#include "carnot/optim.hpp"
#include "carnot/parallel.hpp"

namespace carnot {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::bounded: return "bounded";
        case Verdict::blowup: return "blowup";
        default: return "inconclusive";
    }
}

double second_diff(const ScalarField& f, const Point& p, const HorizontalVec& h) {
    const GroupSpec& spec = *f.spec;
    const Point plus = multiply(spec, p, embed(spec, h));
    HorizontalVec hm = h;
    for (double& v : hm.h) v = -v;
    const Point minus = multiply(spec, p, embed(spec, hm));
    return f(plus) + f(minus) - 2.0 * f(p);
}

std::vector<HorizontalVec> default_directions(const GroupSpec& spec, int n_random,
                                              std::uint64_t seq_index) {
    const int m = spec.n1();
    std::vector<HorizontalVec> dirs;
    for (int i = 0; i < m; ++i) {
        HorizontalVec e(std::vector<double>(m, 0.0));
        e[i] = 1.0;
        dirs.push_back(e);
    }
    for (int r = 0; r < n_random; ++r) {
        std::vector<double> v(m);
        double nrm = 0.0;
        for (int i = 0; i < m; ++i) {
            v[i] = optim::norminv(
                optim::halton(seq_index + static_cast<std::uint64_t>(r) * m + i, 1)[0]);
            nrm += v[i] * v[i];
        }
        nrm = std::sqrt(nrm);
        if (nrm < 1e-12) continue;
        for (double& x : v) x /= nrm;
        dirs.push_back(HorizontalVec(std::move(v)));
    }
    return dirs;
}

ProbeReport semiconcavity_scan(const ScalarField& f, const ScanConfig& config) {
    if (config.ladder.size() < 3)
        throw config_error("semiconcavity_scan: ladder needs at least 3 levels");
    for (std::size_t i = 1; i < config.ladder.size(); ++i)
        if (!(config.ladder[i] < config.ladder[i - 1]))
            throw config_error("semiconcavity_scan: ladder must be strictly decreasing");
    if (config.grid.empty() || config.dirs.empty())
        throw config_error("semiconcavity_scan: empty grid or direction set");

    const std::size_t np = config.grid.size();
    const std::size_t nd = config.dirs.size();
    const std::size_t nl = config.ladder.size();

    ProbeReport report;
    report.field_name = f.name;
    report.samples.resize(np * nd * nl);
    report.total_evals = np * nd * nl;

    parallel_for(np * nd * nl, [&](std::size_t idx) {
        const std::size_t ip = idx / (nd * nl);
        const std::size_t id = (idx / nl) % nd;
        const std::size_t il = idx % nl;
        ProbeSample& s = report.samples[idx];
        s.point_index = ip;
        s.dir_index = id;
        s.p = config.grid[ip];
        s.level = config.ladder[il];
        s.h = config.dirs[id];
        double hnorm = 0.0;
        for (double& v : s.h.h) {
            v *= s.level;
            hnorm += v * v;
        }
        hnorm = std::sqrt(hnorm);
        try {
            s.second_diff = second_diff(f, s.p, s.h);
            s.quotient2 = s.second_diff / (hnorm * hnorm);
            s.quotient1 = s.second_diff / hnorm;
        } catch (const std::exception&) {
            s.failed = true;
        }
    });

    for (const ProbeSample& s : report.samples)
        if (s.failed) ++report.failed_evals;
    if (report.failed_evals >
        config.tolerated_failure_fraction * static_cast<double>(report.total_evals))
        throw config_error("semiconcavity_scan: too many failed evaluations (" +
                           std::to_string(report.failed_evals) + "/" +
                           std::to_string(report.total_evals) + ")");

    report.per_scale_sup.reserve(nl);
    for (std::size_t il = 0; il < nl; ++il) {
        double sup = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t ip = 0; ip < np; ++ip)
            for (std::size_t id = 0; id < nd; ++id) {
                const ProbeSample& s = report.samples[(ip * nd + id) * nl + il];
                if (s.failed) continue;
                sup = std::max(sup, s.quotient2);
                any = true;
            }
        report.per_scale_sup.emplace_back(config.ladder[il],
                                          any ? sup : std::nan(""));
    }

    const auto& sup = report.per_scale_sup;
    const double s_last = sup[nl - 1].second;
    const double s_prev = sup[nl - 2].second;
    const bool stabilized =
        std::isfinite(s_last) && std::isfinite(s_prev) &&
        std::fabs(s_last - s_prev) <=
            config.stabilization_tol * std::max(std::fabs(s_last), std::fabs(s_prev)) +
                1e-12;
    bool doubling = std::fabs(s_last) > 1e-6;
    for (std::size_t il = 0; il + 1 < nl && doubling; ++il) {
        const double a = std::fabs(sup[il].second), b = std::fabs(sup[il + 1].second);
        if (!(b >= config.blowup_factor * a)) doubling = false;
    }
    report.verdict = stabilized ? Verdict::bounded
                     : doubling ? Verdict::blowup
                                : Verdict::inconclusive;

    nlohmann::json echo;
    echo["grid_points"] = np;
    echo["directions"] = nd;
    echo["ladder"] = config.ladder;
    echo["stabilization_tol"] = config.stabilization_tol;
    echo["blowup_factor"] = config.blowup_factor;
    echo["tolerated_failure_fraction"] = config.tolerated_failure_fraction;
    echo["field"] = f.name;
    report.config_echo = echo.dump();
    return report;
}

FirstOrderLimit first_order_limit(const ScalarField& f, const Point& p,
                                  const HorizontalVec& dir,
                                  const std::vector<double>& ladder) {
    if (ladder.size() < 2)
        throw config_error("first_order_limit: ladder needs at least 2 levels");
    FirstOrderLimit out;
    out.quotients.resize(ladder.size());
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        HorizontalVec h = dir;
        double hnorm = 0.0;
        for (double& v : h.h) {
            v *= ladder[i];
            hnorm += v * v;
        }
        out.quotients[i] = second_diff(f, p, h) / std::sqrt(hnorm);
    }
    bool inc = true, dec = true;
    for (std::size_t i = 1; i < out.quotients.size(); ++i) {
        if (out.quotients[i] < out.quotients[i - 1]) inc = false;
        if (out.quotients[i] > out.quotients[i - 1]) dec = false;
    }
    out.inconclusive = !(inc || dec);

    // Neville extrapolation to |h| = 0 assuming a polynomial error in |h|.
    std::vector<double> t = out.quotients;
    const std::vector<double>& h = ladder;
    const std::size_t n = t.size();
    double prev = t[0];
    for (std::size_t k = 1; k < n; ++k) {
        for (std::size_t i = 0; i + k < n; ++i)
            t[i] = t[i + 1] + (t[i + 1] - t[i]) * h[i + k] / (h[i] - h[i + k]);
        out.error_estimate = std::fabs(t[0] - prev);
        prev = t[0];
    }
    out.limit = t[0];
    return out;
}

std::vector<double> fd_horizontal_hessian(const ScalarField& f, const Point& p,
                                          double step) {
    const GroupSpec& spec = *f.spec;
    const int m = spec.n1();
    std::vector<double> hess(m * m, 0.0);
    const double s2 = step * step;
    auto d2_along = [&](const HorizontalVec& dir) {
        HorizontalVec h = dir;
        for (double& v : h.h) v *= step;
        return second_diff(f, p, h) / s2;
    };
    for (int i = 0; i < m; ++i) {
        HorizontalVec e(std::vector<double>(m, 0.0));
        e[i] = 1.0;
        hess[i * m + i] = d2_along(e);
    }
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            HorizontalVec plus(std::vector<double>(m, 0.0));
            HorizontalVec minus(std::vector<double>(m, 0.0));
            plus[i] = inv_sqrt2;
            plus[j] = inv_sqrt2;
            minus[i] = inv_sqrt2;
            minus[j] = -inv_sqrt2;
            const double hij = 0.5 * (d2_along(plus) - d2_along(minus));
            hess[i * m + j] = hij;
            hess[j * m + i] = hij;
        }
    return hess;
}

std::vector<double> fd_horizontal_gradient(const ScalarField& f, const Point& p,
                                           double step) {
    const GroupSpec& spec = *f.spec;
    const int m = spec.n1();
    std::vector<double> grad(m);
    for (int i = 0; i < m; ++i) {
        HorizontalVec h(std::vector<double>(m, 0.0));
        h[i] = step;
        const Point plus = multiply(spec, p, embed(spec, h));
        h[i] = -step;
        const Point minus = multiply(spec, p, embed(spec, h));
        grad[i] = (f(plus) - f(minus)) / (2.0 * step);
    }
    return grad;
}

ScalarField compose_with_psi(const std::function<double(double)>& psi,
                             const ScalarField& f_dist, const std::string& name) {
    ScalarField out;
    out.spec = f_dist.spec;
    out.name = name;
    out.eval = [psi, inner = f_dist.eval](const Point& p) { return psi(inner(p)); };
    return out;
}

ScalarField field_d0sq_exact() {
    ScalarField f;
    f.spec = &registry("heisenberg");
    f.name = "d0sq_exact";
    f.eval = [](const Point& p) { return heis::d0_squared_exact(p); };
    return f;
}

ScalarField field_d0_exact() {
    ScalarField f;
    f.spec = &registry("heisenberg");
    f.name = "d0_exact";
    f.eval = [](const Point& p) { return heis::d0_exact(p); };
    return f;
}

ScalarField field_negate(const ScalarField& f) {
    ScalarField out;
    out.spec = f.spec;
    out.name = "neg_" + f.name;
    out.eval = [inner = f.eval](const Point& p) { return -inner(p); };
    return out;
}

ScalarField field_shoot_d0(const GroupSpec& spec, const ShootOptions& opts) {
    ScalarField f;
    f.spec = &spec;
    f.name = "d0_shoot[" + spec.name() + "]";
    f.eval = [&spec, opts](const Point& p) {
        return shoot_distance(spec, p, opts).distance;
    };
    return f;
}

ScalarField field_oracle_d0(const GroupSpec& spec, int segments,
                            const OracleOptions& opts) {
    ScalarField f;
    f.spec = &spec;
    f.name = "d0_oracle[" + spec.name() + "]";
    f.eval = [&spec, segments, opts](const Point& p) {
        return control_oracle_distance(spec, p, segments, opts);
    };
    return f;
}

ScalarField field_memoized(const ScalarField& f) {
    struct Cache {
        std::mutex mu;
        std::map<std::vector<double>, double> values;
    };
    auto cache = std::make_shared<Cache>();
    ScalarField out;
    out.spec = f.spec;
    out.name = f.name;
    out.eval = [cache, inner = f.eval](const Point& p) {
        {
            std::lock_guard<std::mutex> lock(cache->mu);
            auto it = cache->values.find(p.c);
            if (it != cache->values.end()) return it->second;
        }
        const double v = inner(p);
        std::lock_guard<std::mutex> lock(cache->mu);
        cache->values.emplace(p.c, v);
        return v;
    };
    return out;
}

std::string ProbeReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["field"] = field_name;
    j["verdict"] = to_string(verdict);
    j["failed_evals"] = failed_evals;
    j["total_evals"] = total_evals;
    j["config"] = nlohmann::json::parse(config_echo.empty() ? "{}" : config_echo);
    nlohmann::json sups = nlohmann::json::array();
    for (const auto& [level, s] : per_scale_sup)
        sups.push_back({{"level", level}, {"sup_quotient2", s}});
    j["per_scale_sup"] = sups;
    nlohmann::json rows = nlohmann::json::array();
    for (const ProbeSample& s : samples) {
        nlohmann::json r;
        r["point_index"] = s.point_index;
        r["dir_index"] = s.dir_index;
        r["p"] = s.p.c;
        r["h"] = s.h.h;
        r["level"] = s.level;
        r["second_diff"] = s.second_diff;
        r["quotient2"] = s.quotient2;
        r["quotient1"] = s.quotient1;
        r["failed"] = s.failed;
        rows.push_back(std::move(r));
    }
    j["samples"] = rows;
    return j.dump(2);
}

void ProbeReport::write_csv(const std::string& filename) const {
    std::FILE* out = std::fopen(filename.c_str(), "wb");
    if (!out) throw config_error("ProbeReport: cannot open " + filename);
    const std::size_t n = samples.empty() ? 0 : samples[0].p.size();
    const std::size_t m = samples.empty() ? 0 : samples[0].h.size();
    std::fprintf(out, "point_index,dir_index");
    for (std::size_t i = 1; i <= n; ++i) std::fprintf(out, ",p_%zu", i);
    for (std::size_t i = 1; i <= m; ++i) std::fprintf(out, ",h_%zu", i);
    std::fprintf(out, ",level,second_diff,quotient2,quotient1,failed\n");
    for (const ProbeSample& s : samples) {
        std::fprintf(out, "%zu,%zu", s.point_index, s.dir_index);
        for (std::size_t i = 0; i < n; ++i) std::fprintf(out, ",%.17g", s.p[i]);
        for (std::size_t i = 0; i < m; ++i) std::fprintf(out, ",%.17g", s.h[i]);
        std::fprintf(out, ",%.17g,%.17g,%.17g,%.17g,%d\n", s.level, s.second_diff,
                     s.quotient2, s.quotient1, s.failed ? 1 : 0);
    }
    std::fclose(out);
}

} // namespace carnot
