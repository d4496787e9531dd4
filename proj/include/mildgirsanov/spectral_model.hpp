#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mg {

/// Coefficients of a state in the eigenbasis of A.
using ModeVector = std::vector<double>;

/// Diagonal model of the linear operator: A e_j = -lambda_j e_j.
///
/// Eigenvalues are strictly positive and nondecreasing, so the spectral gap
/// omega is the first eigenvalue and |e^{tA}| = e^{-omega t}. `beta` is the
/// trace exponent used by the Sobolev bound and `epsilon` colors the noise
/// through (-A)^{-epsilon/2} (epsilon = 0 is white noise).
class OperatorSpec {
public:
    OperatorSpec(std::vector<double> eigenvalues, double beta, double epsilon);

    /// lambda_j = j^2, j = 1..d (Dirichlet Laplacian on (0, pi)).
    static OperatorSpec laplacian(std::size_t modes, double beta = 0.25, double epsilon = 0.0);

    std::size_t modes() const noexcept { return eigenvalues_.size(); }
    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    double eigenvalue(std::size_t j) const { return eigenvalues_.at(j); }
    double beta() const noexcept { return beta_; }
    double epsilon() const noexcept { return epsilon_; }
    double omega() const noexcept { return omega_; }

    OperatorSpec with_epsilon(double epsilon) const { return {eigenvalues_, beta_, epsilon}; }

private:
    std::vector<double> eigenvalues_;
    double beta_;
    double epsilon_;
    double omega_;
};

enum class DriftKind { zero, linear, bounded_tanh, componentwise_custom };

std::string to_string(DriftKind kind);

/// Componentwise nonlinearity b acting in the eigenbasis of A.
///
/// `linear` is b(z) = c z. `bounded_tanh` is the dissipative b(z)_j = -m tanh(a z_j),
/// with sup bound m sqrt(d) and Lipschitz constant m a. Custom drifts supply the
/// scalar map, optionally its derivative, and their own constants.
struct DriftSpec {
    DriftKind kind = DriftKind::zero;
    double coefficient = 0.0;  // c for linear
    double amplitude = 0.0;    // m for tanh
    double scale = 0.0;        // a for tanh
    double lipschitz_const = 0.0;
    std::optional<double> sup_bound;
    bool dissipative = true;
    std::function<double(double)> scalar_map;
    std::function<double(double)> scalar_derivative;

    static DriftSpec zero();
    static DriftSpec linear(double c);
    static DriftSpec bounded_tanh(double amplitude, double scale, std::size_t modes);
    static DriftSpec custom(std::function<double(double)> map, double lipschitz,
                            std::optional<double> sup_bound, bool dissipative,
                            std::function<double(double)> derivative = {});

    bool differentiable() const noexcept;

    /// Throws if the drift is incompatible with the operator (e.g. c >= omega).
    void validate(const OperatorSpec& spec) const;

    /// ‖b‖_∞, or a descriptive error naming `purpose` when the drift is unbounded.
    double require_sup_bound(const std::string& purpose) const;
};

/// e^{tA} v, componentwise e^{-lambda_j t} v_j. Rejects t < 0.
ModeVector semigroup_apply(const OperatorSpec& spec, double t, std::span<const double> v);

/// (-A)^alpha v, componentwise lambda_j^alpha v_j.
ModeVector fractional_apply(const OperatorSpec& spec, double alpha, std::span<const double> v);

struct TraceDiagnostic {
    double trace_value = 0.0;        // sum_j lambda_j^{beta-1}
    std::vector<double> per_mode;    // summands
    double tail_ratio = 0.0;         // lambda_d^{beta-1} / trace_value
};

TraceDiagnostic trace_diagnostic(const OperatorSpec& spec);

ModeVector drift_eval(const DriftSpec& drift, std::span<const double> z);

/// In-place variant used on the hot paths.
void drift_eval_into(const DriftSpec& drift, std::span<const double> z, std::span<double> out);

/// Diagonal of the Jacobian of b at z. Requires a differentiable drift.
ModeVector drift_derivative(const DriftSpec& drift, std::span<const double> z);

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

void require_modes(const OperatorSpec& spec, std::span<const double> v, const char* what);

}  // namespace mg
