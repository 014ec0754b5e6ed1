#include "flowcast/error.hpp"
#include "flowcast/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace flowcast {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::empty_input: return "empty-input";
        case ErrorCode::insufficient_span: return "insufficient-span";
        case ErrorCode::degenerate_split: return "degenerate-split";
        case ErrorCode::insufficient_data: return "insufficient-data";
        case ErrorCode::degenerate_series: return "degenerate-series";
        case ErrorCode::bad_window: return "bad-window";
        case ErrorCode::bad_parameter: return "bad-parameter";
        case ErrorCode::unfitted: return "unfitted";
        case ErrorCode::collinear_data: return "collinear-data";
        case ErrorCode::insufficient_history: return "insufficient-history";
        case ErrorCode::bad_dimension: return "bad-dimension";
        case ErrorCode::non_finite_grid: return "non-finite-grid";
        case ErrorCode::bad_format: return "bad-format";
        case ErrorCode::io: return "io";
        case ErrorCode::closed_run: return "closed-run";
    }
    return "unknown";
}

std::uint64_t Rng::index(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

double Rng::normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::mt19937_64 engine(master + stream);
    return engine();
}

}  // namespace flowcast
