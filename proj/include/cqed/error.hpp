#pragma once

#include <stdexcept>
#include <string>

namespace cqed {

enum class ErrorCode {
    invalid_dimension,
    invalid_configuration,
    invalid_argument,
    non_hermitian,
    zero_norm,
    numerical_failure,
    no_jump_possible,
    truncation,
    out_of_regime,
    divergent_q,
    undefined_correlation,
    singular_system,
    non_unique_steady_state,
    empty_window,
    empty_series,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_dimension: return "invalid-dimension";
    case ErrorCode::invalid_configuration: return "invalid-configuration";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::non_hermitian: return "non-hermitian";
    case ErrorCode::zero_norm: return "zero-norm";
    case ErrorCode::numerical_failure: return "numerical-failure";
    case ErrorCode::no_jump_possible: return "no-jump-possible";
    case ErrorCode::truncation: return "truncation";
    case ErrorCode::out_of_regime: return "out-of-regime";
    case ErrorCode::divergent_q: return "divergent-q";
    case ErrorCode::undefined_correlation: return "undefined-correlation";
    case ErrorCode::singular_system: return "singular-system";
    case ErrorCode::non_unique_steady_state: return "non-unique-steady-state";
    case ErrorCode::empty_window: return "empty-window";
    case ErrorCode::empty_series: return "empty-series";
    }
    return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace cqed
