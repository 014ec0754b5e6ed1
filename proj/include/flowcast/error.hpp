#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flowcast {

/// Error kinds raised across the library. The CLI maps them onto exit codes.
enum class ErrorCode {
    empty_input,
    insufficient_span,
    degenerate_split,
    insufficient_data,
    degenerate_series,
    bad_window,
    bad_parameter,
    unfitted,
    collinear_data,
    insufficient_history,
    bad_dimension,
    non_finite_grid,
    bad_format,
    io,
    closed_run,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace flowcast
