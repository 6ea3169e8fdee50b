#include "carnot/group.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"

namespace carnot {

double HorizontalVec::norm() const {
    double s = 0.0;
    for (double v : h) s += v * v;
    return std::sqrt(s);
}

GroupSpec GroupSpec::bilinear(std::string name, int n1, int n2,
                              std::vector<std::vector<double>> matrices) {
    if (n1 < 1) throw config_error("first layer dimension must be >= 1");
    if (n2 < 0) throw config_error("second layer dimension must be >= 0");
    if (n2 == 0 && !matrices.empty())
        throw config_error("trivial second layer admits no matrices");
    if (n2 > 0 && matrices.size() != static_cast<std::size_t>(n2))
        throw config_error("need one matrix per second-layer coordinate");
    for (const auto& m : matrices) {
        if (m.size() != static_cast<std::size_t>(n1) * n1)
            throw config_error("matrix size must be n1*n1");
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n1; ++j)
                if (m[i * n1 + j] != -m[j * n1 + i])
                    throw config_error("bilinear matrix is not skew-symmetric");
    }
    GroupSpec s;
    s.name_ = std::move(name);
    s.step_ = 2;
    s.dims_ = {n1, n2};
    s.law_ = GroupLaw::bilinear;
    s.b_ = std::move(matrices);
    s.finalize();
    return s;
}

GroupSpec GroupSpec::engel() {
    GroupSpec s;
    s.name_ = "engel";
    s.step_ = 3;
    s.dims_ = {2, 1, 1};
    s.law_ = GroupLaw::engel;
    s.finalize();
    return s;
}

void GroupSpec::finalize() {
    n_ = 0;
    for (int d : dims_) n_ += d;
    // Entrywise bound |u^T B_k v| <= (sum_ij |B_k[i][j]|) |u||v|, combined in
    // l2 over k. Reproduces the worked constant 1 for the Heisenberg form.
    double acc = 0.0;
    for (const auto& m : b_) {
        double s1 = 0.0;
        for (double v : m) s1 += std::fabs(v);
        acc += s1 * s1;
    }
    c0_ = std::sqrt(acc);
}

int GroupSpec::layer_offset(int j) const {
    int off = 0;
    for (int i = 1; i < j; ++i) off += dims_[i - 1];
    return off;
}

void GroupSpec::apply_bilinear(const double* u, const double* v, double* out) const {
    const int m = n1();
    for (std::size_t k = 0; k < b_.size(); ++k) {
        const double* bk = b_[k].data();
        double s = 0.0;
        for (int i = 0; i < m; ++i) {
            double row = 0.0;
            for (int j = 0; j < m; ++j) row += bk[i * m + j] * v[j];
            s += u[i] * row;
        }
        out[k] = s;
    }
}

void check_point(const GroupSpec& spec, const Point& p, const char* where) {
    if (p.size() != static_cast<std::size_t>(spec.n())) {
        int layer = 1, seen = 0;
        for (int d : spec.layer_dims()) {
            if (p.size() < static_cast<std::size_t>(seen + d)) break;
            seen += d;
            ++layer;
        }
        std::ostringstream os;
        os << where << ": point has " << p.size() << " coordinates, spec '"
           << spec.name() << "' needs " << spec.n() << " (short at layer " << layer
           << ")";
        throw dimension_error(os.str(), layer);
    }
    for (double v : p.c)
        if (!std::isfinite(v))
            throw domain_error(std::string(where) + ": non-finite coordinate");
}

Point zero_point(const GroupSpec& spec) {
    return Point(std::vector<double>(spec.n(), 0.0));
}

Point multiply(const GroupSpec& spec, const Point& p, const Point& q) {
    check_point(spec, p, "multiply");
    check_point(spec, q, "multiply");
    Point out(std::vector<double>(spec.n()));
    for (int i = 0; i < spec.n(); ++i) out[i] = p[i] + q[i];
    if (spec.law() == GroupLaw::bilinear) {
        const int off2 = spec.layer_offset(2);
        std::vector<double> corr(spec.n2(), 0.0);
        if (!spec.matrices().empty()) {
            spec.apply_bilinear(p.c.data(), q.c.data(), corr.data());
            for (int k = 0; k < spec.n2(); ++k) out[off2 + k] += corr[k];
        }
        return out;
    }
    // Engel law in coordinates (x, y, z, s).
    const double x = p[0], y = p[1], z = p[2];
    const double X = q[0], Y = q[1], Z = q[2];
    const double area = x * Y - X * y;
    out[2] += 0.5 * area;
    out[3] += 0.5 * (x * Z - X * z) + (x - X) * area / 12.0;
    return out;
}

Point inverse(const GroupSpec& spec, const Point& p) {
    check_point(spec, p, "inverse");
    Point out = p;
    for (double& v : out.c) v = -v;
    return out;
}

Point dilate(const GroupSpec& spec, double r, const Point& p) {
    if (!(r > 0.0)) throw domain_error("dilate: factor must be positive");
    check_point(spec, p, "dilate");
    Point out = p;
    int off = 0;
    double w = 1.0;
    for (int j = 0; j < spec.step(); ++j) {
        w *= r;
        for (int i = 0; i < spec.layer_dims()[j]; ++i) out[off + i] *= w;
        off += spec.layer_dims()[j];
    }
    return out;
}

double homogeneous_norm(const GroupSpec& spec, const Point& p) {
    check_point(spec, p, "homogeneous_norm");
    const int s = spec.step();
    double fact = 1.0;
    for (int i = 2; i <= s; ++i) fact *= i;
    const double power = 2.0 * fact;
    double sum = 0.0;
    int off = 0;
    for (int j = 1; j <= s; ++j) {
        double layer2 = 0.0;
        for (int i = 0; i < spec.layer_dims()[j - 1]; ++i)
            layer2 += p[off + i] * p[off + i];
        off += spec.layer_dims()[j - 1];
        if (layer2 > 0.0) sum += std::pow(layer2, 0.5 * power / j);
    }
    return std::pow(sum, 1.0 / power);
}

Point embed(const GroupSpec& spec, const HorizontalVec& h) {
    if (h.size() != static_cast<std::size_t>(spec.n1()))
        throw dimension_error("embed: horizontal vector does not match first layer", 1);
    Point out = zero_point(spec);
    for (int i = 0; i < spec.n1(); ++i) out[i] = h[i];
    return out;
}

Point left_translate(const GroupSpec& spec, const Point& p, const HorizontalVec& h,
                     double tau) {
    HorizontalVec th = h;
    for (double& v : th.h) v *= tau;
    return multiply(spec, p, embed(spec, th));
}

namespace {

GroupSpec make_heisenberg() {
    return GroupSpec::bilinear("heisenberg", 2, 1, {{0.0, 0.5, -0.5, 0.0}});
}

GroupSpec make_rxh() {
    // R x H with first layer (w, x, y): only the (x, y) pair brackets.
    std::vector<double> b(9, 0.0);
    b[1 * 3 + 2] = 0.5;
    b[2 * 3 + 1] = -0.5;
    return GroupSpec::bilinear("rxh", 3, 1, {b});
}

GroupSpec make_abelian3() {
    return GroupSpec::bilinear("abelian3", 2, 1, {{0.0, 0.0, 0.0, 0.0}});
}

const std::map<std::string, GroupSpec>& builtin_registry() {
    static const std::map<std::string, GroupSpec> reg = [] {
        std::map<std::string, GroupSpec> m;
        m.emplace("heisenberg", make_heisenberg());
        m.emplace("rxh", make_rxh());
        m.emplace("engel", GroupSpec::engel());
        m.emplace("abelian3", make_abelian3());
        return m;
    }();
    return reg;
}

} // namespace

const GroupSpec& registry(const std::string& name) {
    const auto& reg = builtin_registry();
    auto it = reg.find(name);
    if (it == reg.end()) throw config_error("unknown group '" + name + "'");
    return it->second;
}

std::vector<std::string> registry_names() {
    std::vector<std::string> names;
    for (const auto& [k, v] : builtin_registry()) names.push_back(k);
    return names;
}

std::string GroupSpec::to_json() const {
    nlohmann::json j;
    j["name"] = name_;
    j["step"] = step_;
    j["layer_dims"] = dims_;
    if (law_ == GroupLaw::engel) {
        j["law"] = {{"type", "engel"}};
    } else {
        nlohmann::json mats = nlohmann::json::array();
        const int m = n1();
        for (const auto& flat : b_) {
            nlohmann::json rows = nlohmann::json::array();
            for (int i = 0; i < m; ++i)
                rows.push_back(std::vector<double>(flat.begin() + i * m,
                                                   flat.begin() + (i + 1) * m));
            mats.push_back(rows);
        }
        j["law"] = {{"type", "bilinear"}, {"matrices", mats}};
    }
    return j.dump(2);
}

GroupSpec GroupSpec::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    const std::string type = j.at("law").at("type").get<std::string>();
    const auto dims = j.at("layer_dims").get<std::vector<int>>();
    const int step = j.at("step").get<int>();
    if (dims.size() != static_cast<std::size_t>(step))
        throw config_error("layer_dims length must equal step");
    if (type == "engel") {
        if (step != 3 || dims != std::vector<int>{2, 1, 1})
            throw config_error("engel law requires step 3 with layers (2,1,1)");
        GroupSpec s = GroupSpec::engel();
        s.name_ = j.at("name").get<std::string>();
        return s;
    }
    if (type != "bilinear") throw config_error("unknown law type '" + type + "'");
    if (step != 2) throw config_error("bilinear law requires step 2");
    std::vector<std::vector<double>> mats;
    if (j.at("law").contains("matrices")) {
        for (const auto& rows : j.at("law").at("matrices")) {
            std::vector<double> flat;
            for (const auto& row : rows)
                for (const auto& v : row) flat.push_back(v.get<double>());
            mats.push_back(std::move(flat));
        }
    }
    return GroupSpec::bilinear(j.at("name").get<std::string>(), dims[0], dims[1],
                               std::move(mats));
}

} // namespace carnot
