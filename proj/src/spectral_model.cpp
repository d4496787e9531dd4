#include "mildgirsanov/spectral_model.hpp"

#include <cmath>
#include <sstream>

namespace mg {

OperatorSpec::OperatorSpec(std::vector<double> eigenvalues, double beta, double epsilon)
    : eigenvalues_(std::move(eigenvalues)), beta_(beta), epsilon_(epsilon), omega_(0.0) {
    if (eigenvalues_.empty()) {
        throw std::invalid_argument("operator needs at least one mode");
    }
    for (std::size_t j = 0; j < eigenvalues_.size(); ++j) {
        if (!(eigenvalues_[j] > 0.0) || !std::isfinite(eigenvalues_[j])) {
            throw std::invalid_argument("eigenvalues must be finite and strictly positive");
        }
        if (j > 0 && eigenvalues_[j] < eigenvalues_[j - 1]) {
            throw std::invalid_argument("eigenvalues must be nondecreasing");
        }
    }
    if (!(beta_ > 0.0 && beta_ < 1.0)) {
        throw std::invalid_argument("beta must lie in (0, 1)");
    }
    if (!(epsilon_ >= 0.0) || !std::isfinite(epsilon_)) {
        throw std::invalid_argument("epsilon must be a finite value >= 0");
    }
    omega_ = eigenvalues_.front();
}

OperatorSpec OperatorSpec::laplacian(std::size_t modes, double beta, double epsilon) {
    std::vector<double> lambda(modes);
    for (std::size_t j = 0; j < modes; ++j) {
        const double k = static_cast<double>(j + 1);
        lambda[j] = k * k;
    }
    return {std::move(lambda), beta, epsilon};
}

std::string to_string(DriftKind kind) {
    switch (kind) {
        case DriftKind::zero: return "zero";
        case DriftKind::linear: return "linear";
        case DriftKind::bounded_tanh: return "tanh";
        case DriftKind::componentwise_custom: return "custom";
    }
    return "unknown";
}

DriftSpec DriftSpec::zero() {
    DriftSpec d;
    d.kind = DriftKind::zero;
    d.sup_bound = 0.0;
    d.dissipative = true;
    return d;
}

DriftSpec DriftSpec::linear(double c) {
    DriftSpec d;
    d.kind = DriftKind::linear;
    d.coefficient = c;
    d.lipschitz_const = std::abs(c);
    d.sup_bound = c == 0.0 ? std::optional<double>(0.0) : std::nullopt;
    d.dissipative = c <= 0.0;
    return d;
}

DriftSpec DriftSpec::bounded_tanh(double amplitude, double scale, std::size_t modes) {
    if (!(amplitude >= 0.0) || !(scale >= 0.0)) {
        throw std::invalid_argument("tanh drift needs amplitude >= 0 and scale >= 0");
    }
    DriftSpec d;
    d.kind = DriftKind::bounded_tanh;
    d.amplitude = amplitude;
    d.scale = scale;
    d.lipschitz_const = amplitude * scale;
    d.sup_bound = amplitude * std::sqrt(static_cast<double>(modes));
    d.dissipative = true;
    return d;
}

DriftSpec DriftSpec::custom(std::function<double(double)> map, double lipschitz,
                            std::optional<double> sup_bound, bool dissipative,
                            std::function<double(double)> derivative) {
    if (!map) throw std::invalid_argument("custom drift needs a scalar map");
    DriftSpec d;
    d.kind = DriftKind::componentwise_custom;
    d.scalar_map = std::move(map);
    d.scalar_derivative = std::move(derivative);
    d.lipschitz_const = lipschitz;
    d.sup_bound = sup_bound;
    d.dissipative = dissipative;
    return d;
}

bool DriftSpec::differentiable() const noexcept {
    switch (kind) {
        case DriftKind::zero:
        case DriftKind::linear:
        case DriftKind::bounded_tanh: return true;
        case DriftKind::componentwise_custom: return static_cast<bool>(scalar_derivative);
    }
    return false;
}

void DriftSpec::validate(const OperatorSpec& spec) const {
    if (kind == DriftKind::linear && !(coefficient < spec.omega())) {
        std::ostringstream os;
        os << "linear drift coefficient c = " << coefficient
           << " must be below the spectral gap omega = " << spec.omega();
        throw std::invalid_argument(os.str());
    }
    if (kind == DriftKind::bounded_tanh && sup_bound) {
        const double expected = amplitude * std::sqrt(static_cast<double>(spec.modes()));
        if (std::abs(*sup_bound - expected) > 1e-12 * (1.0 + expected)) {
            throw std::invalid_argument("tanh drift was built for a different mode count");
        }
    }
}

double DriftSpec::require_sup_bound(const std::string& purpose) const {
    if (!sup_bound) {
        throw std::invalid_argument(purpose + " needs a bounded drift, but the " + to_string(kind) +
                                    " drift has no finite sup bound");
    }
    return *sup_bound;
}

void require_modes(const OperatorSpec& spec, std::span<const double> v, const char* what) {
    if (v.size() != spec.modes()) {
        std::ostringstream os;
        os << what << ": expected " << spec.modes() << " modes, got " << v.size();
        throw DimensionError(os.str());
    }
}

ModeVector semigroup_apply(const OperatorSpec& spec, double t, std::span<const double> v) {
    require_modes(spec, v, "semigroup_apply");
    if (t < 0.0) throw std::invalid_argument("semigroup_apply: time must be >= 0");
    ModeVector out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        out[j] = std::exp(-spec.eigenvalue(j) * t) * v[j];
    }
    return out;
}

ModeVector fractional_apply(const OperatorSpec& spec, double alpha, std::span<const double> v) {
    require_modes(spec, v, "fractional_apply");
    ModeVector out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        out[j] = alpha == 0.0 ? v[j] : std::pow(spec.eigenvalue(j), alpha) * v[j];
    }
    return out;
}

TraceDiagnostic trace_diagnostic(const OperatorSpec& spec) {
    TraceDiagnostic diag;
    diag.per_mode.reserve(spec.modes());
    for (double lambda : spec.eigenvalues()) {
        diag.per_mode.push_back(std::pow(lambda, spec.beta() - 1.0));
    }
    // Smallest summands first.
    for (auto it = diag.per_mode.rbegin(); it != diag.per_mode.rend(); ++it) {
        diag.trace_value += *it;
    }
    diag.tail_ratio = diag.per_mode.back() / diag.trace_value;
    return diag;
}

void drift_eval_into(const DriftSpec& drift, std::span<const double> z, std::span<double> out) {
    switch (drift.kind) {
        case DriftKind::zero:
            for (auto& o : out) o = 0.0;
            return;
        case DriftKind::linear:
            for (std::size_t j = 0; j < z.size(); ++j) out[j] = drift.coefficient * z[j];
            return;
        case DriftKind::bounded_tanh:
            for (std::size_t j = 0; j < z.size(); ++j) {
                out[j] = -drift.amplitude * std::tanh(drift.scale * z[j]);
            }
            return;
        case DriftKind::componentwise_custom:
            for (std::size_t j = 0; j < z.size(); ++j) out[j] = drift.scalar_map(z[j]);
            return;
    }
}

ModeVector drift_eval(const DriftSpec& drift, std::span<const double> z) {
    ModeVector out(z.size());
    drift_eval_into(drift, z, out);
    return out;
}

ModeVector drift_derivative(const DriftSpec& drift, std::span<const double> z) {
    if (!drift.differentiable()) {
        throw std::invalid_argument("drift derivative requested for a non-differentiable drift");
    }
    ModeVector out(z.size(), 0.0);
    for (std::size_t j = 0; j < z.size(); ++j) {
        switch (drift.kind) {
            case DriftKind::zero: out[j] = 0.0; break;
            case DriftKind::linear: out[j] = drift.coefficient; break;
            case DriftKind::bounded_tanh: {
                const double th = std::tanh(drift.scale * z[j]);
                out[j] = -drift.amplitude * drift.scale * (1.0 - th * th);
                break;
            }
            case DriftKind::componentwise_custom: out[j] = drift.scalar_derivative(z[j]); break;
        }
    }
    return out;
}

}  // namespace mg
