#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace wp {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
    Vec2 scaled(double a) const { return {a * x, a * y}; }
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
};

inline Vec2 unit_from_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }

enum class Errc {
    config_invalid,
    origin_not_interior,
    degenerate_extents,
    invalid_epsilon,
    empty_face,
    grid_too_coarse,
    nt_overflow,
    nan_sample,
    grid_mismatch,
    support_violation,
    unstable_scheme,
    lambda_too_small,
    ill_conditioned_inversion,
    probe_mismatch,
    support_leak,
    list_too_short,
    empty_family,
    degenerate_probes,
    hypothesis_violation,
    bad_magic,
    truncation,
    dim_overflow,
    unset_sign,
    bad_radius,
    boundary_mismatch,
    io_failure,
    stage_failure,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

// Norms of phase-weighted fields overflow doubles long before the ratios we
// report do, so norms are carried as log values.
struct LogVal {
    double ln = -std::numeric_limits<double>::infinity();

    static LogVal from_linear(double v) {
        LogVal r;
        r.ln = (v > 0.0) ? std::log(v) : -std::numeric_limits<double>::infinity();
        return r;
    }
    double linear() const { return std::exp(ln); }
    bool is_zero() const { return !std::isfinite(ln); }
};

inline double log_ratio(const LogVal& num, const LogVal& den) {
    if (num.is_zero()) return 0.0;
    return std::exp(num.ln - den.ln);
}

// hypot-style combination of two log-scaled norms: sqrt(a^2 + b^2).
inline LogVal log_hypot(const LogVal& a, const LogVal& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    double m = std::max(a.ln, b.ln);
    LogVal r;
    r.ln = m + 0.5 * std::log(std::exp(2.0 * (a.ln - m)) + std::exp(2.0 * (b.ln - m)));
    return r;
}

}  // namespace wp
