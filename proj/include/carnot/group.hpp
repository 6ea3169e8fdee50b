#pragma once

#include <string>
#include <vector>

#include "carnot/errors.hpp"

namespace carnot {

/// A group element in layered exponential coordinates.
struct Point {
    std::vector<double> c;

    Point() = default;
    explicit Point(std::vector<double> coords) : c(std::move(coords)) {}
    Point(std::initializer_list<double> coords) : c(coords) {}

    std::size_t size() const noexcept { return c.size(); }
    double operator[](std::size_t i) const { return c[i]; }
    double& operator[](std::size_t i) { return c[i]; }
};

/// A first-layer vector; embeds into the group as (h, 0, ..., 0).
struct HorizontalVec {
    std::vector<double> h;

    HorizontalVec() = default;
    explicit HorizontalVec(std::vector<double> v) : h(std::move(v)) {}
    HorizontalVec(std::initializer_list<double> v) : h(v) {}

    std::size_t size() const noexcept { return h.size(); }
    double operator[](std::size_t i) const { return h[i]; }
    double& operator[](std::size_t i) { return h[i]; }
    double norm() const;
};

enum class GroupLaw { bilinear, engel };

/// Defines a concrete group: step, layer dimensions and multiplication law.
///
/// For step 2 the law is a family of skew-symmetric n1 x n1 matrices B_k,
/// one per second-layer coordinate, with correction B(u,v)_k = u^T B_k v.
/// The Engel law is bespoke (step 3, layers 2,1,1).
class GroupSpec {
public:
    /// Step-2 spec from skew matrices (row-major, one flat n1*n1 block per
    /// second-layer coordinate). Pass an empty list for an abelian layer.
    static GroupSpec bilinear(std::string name, int n1, int n2,
                              std::vector<std::vector<double>> matrices);
    static GroupSpec engel();

    const std::string& name() const noexcept { return name_; }
    int step() const noexcept { return step_; }
    const std::vector<int>& layer_dims() const noexcept { return dims_; }
    int n() const noexcept { return n_; }
    int n1() const noexcept { return dims_[0]; }
    int n2() const noexcept { return step_ >= 2 ? dims_[1] : 0; }
    int layer_offset(int j) const; // 1-based layer index
    GroupLaw law() const noexcept { return law_; }

    /// Cached constant with |B(u,v)| <= C0 |u||v| (step-2 laws only).
    double c0() const noexcept { return c0_; }

    /// out[k] = u^T B_k v, for first-layer vectors u, v.
    void apply_bilinear(const double* u, const double* v, double* out) const;
    const std::vector<std::vector<double>>& matrices() const noexcept { return b_; }

    std::string to_json() const;
    static GroupSpec from_json(const std::string& text);

private:
    GroupSpec() = default;
    void finalize();

    std::string name_;
    int step_ = 0;
    std::vector<int> dims_;
    GroupLaw law_ = GroupLaw::bilinear;
    std::vector<std::vector<double>> b_; // flat row-major n1 x n1 blocks
    double c0_ = 0.0;
    int n_ = 0;
};

/// Built-in specs: "heisenberg", "rxh", "engel", "abelian3".
const GroupSpec& registry(const std::string& name);
std::vector<std::string> registry_names();

Point multiply(const GroupSpec& spec, const Point& p, const Point& q);
Point inverse(const GroupSpec& spec, const Point& p);
Point dilate(const GroupSpec& spec, double r, const Point& p);
double homogeneous_norm(const GroupSpec& spec, const Point& p);

Point embed(const GroupSpec& spec, const HorizontalVec& h);
Point left_translate(const GroupSpec& spec, const Point& p, const HorizontalVec& h,
                     double tau);

Point zero_point(const GroupSpec& spec);
void check_point(const GroupSpec& spec, const Point& p, const char* where);

} // namespace carnot
