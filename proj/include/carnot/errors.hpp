#pragma once

#include <stdexcept>
#include <string>

namespace carnot {

/// Mismatch between a vector and the layer structure of a group.
class dimension_error : public std::invalid_argument {
public:
    dimension_error(const std::string& what, int layer)
        : std::invalid_argument(what), layer_(layer) {}
    int layer() const noexcept { return layer_; }

private:
    int layer_;
};

/// Input outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Integration produced a non-finite state.
class divergence_error : public std::runtime_error {
public:
    divergence_error(const std::string& what, double time)
        : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// No shooting start reached the target within the acceptance gap.
class unreached_target : public std::runtime_error {
public:
    unreached_target(const std::string& what, double best_residual)
        : std::runtime_error(what), best_residual_(best_residual) {}
    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

/// The control-discretization oracle failed to meet its endpoint residual.
class oracle_failure : public std::runtime_error {
public:
    oracle_failure(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Derivatives were requested on a non-smooth locus.
class non_smooth_locus : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration (bad flags, unsolvable radius equation, ...).
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace carnot
