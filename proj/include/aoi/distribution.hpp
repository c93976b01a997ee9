#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace aoi {

enum class Family { exponential, gamma, deterministic, uniform };

/// Parametric description of a nonnegative random variable.
/// Only the fields relevant to the family are meaningful:
///   exponential: rate;  gamma: shape, rate;  deterministic: value;  uniform: lo, hi.
struct DistributionSpec {
    Family family = Family::exponential;
    double rate = 0.0;
    double shape = 0.0;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

namespace detail {
// double-precision internals, no long-double promotion (speed; accuracy is far
// below Monte Carlo noise in every use here)
using gamma_policy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

inline void check(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}
}  // namespace detail

inline void validate(const DistributionSpec& d) {
    switch (d.family) {
        case Family::exponential:
            detail::check(d.rate > 0 && std::isfinite(d.rate), "exponential: rate must be positive");
            break;
        case Family::gamma:
            detail::check(d.shape > 0 && std::isfinite(d.shape), "gamma: shape must be positive");
            detail::check(d.rate > 0 && std::isfinite(d.rate), "gamma: rate must be positive");
            break;
        case Family::deterministic:
            // value 0 is allowed: degenerate zero-service models are meaningful
            detail::check(d.value >= 0 && std::isfinite(d.value), "deterministic: value must be nonnegative");
            break;
        case Family::uniform:
            detail::check(d.lo >= 0 && std::isfinite(d.lo), "uniform: lo must be nonnegative");
            detail::check(d.hi > d.lo && std::isfinite(d.hi), "uniform: hi must exceed lo");
            break;
    }
}

inline DistributionSpec exponential(double rate) {
    DistributionSpec d;
    d.family = Family::exponential;
    d.rate = rate;
    validate(d);
    return d;
}

inline DistributionSpec gamma(double shape, double rate) {
    DistributionSpec d;
    d.family = Family::gamma;
    d.shape = shape;
    d.rate = rate;
    validate(d);
    return d;
}

inline DistributionSpec deterministic(double value) {
    DistributionSpec d;
    d.family = Family::deterministic;
    d.value = value;
    validate(d);
    return d;
}

inline DistributionSpec uniform(double lo, double hi) {
    DistributionSpec d;
    d.family = Family::uniform;
    d.lo = lo;
    d.hi = hi;
    validate(d);
    return d;
}

/// Raw moment E[X^order], order 1 or 2, in closed form.
inline double moment(const DistributionSpec& d, int order) {
    if (order != 1 && order != 2) throw std::invalid_argument("moment: order must be 1 or 2");
    switch (d.family) {
        case Family::exponential:
            return order == 1 ? 1.0 / d.rate : 2.0 / (d.rate * d.rate);
        case Family::gamma:
            return order == 1 ? d.shape / d.rate : d.shape * (d.shape + 1.0) / (d.rate * d.rate);
        case Family::deterministic:
            return order == 1 ? d.value : d.value * d.value;
        case Family::uniform:
            return order == 1 ? 0.5 * (d.lo + d.hi)
                              : (d.lo * d.lo + d.lo * d.hi + d.hi * d.hi) / 3.0;
    }
    throw std::logic_error("moment: unknown family");
}

inline double mean(const DistributionSpec& d) { return moment(d, 1); }

/// Pr(X > x), right-continuous. In particular the deterministic atom has ccdf 0
/// at the atom itself, which is what the departure-before-arrival tie rule needs.
inline double ccdf(const DistributionSpec& d, double x) {
    if (x < 0) return 1.0;
    switch (d.family) {
        case Family::exponential:
            return std::exp(-d.rate * x);
        case Family::gamma:
            return boost::math::gamma_q(d.shape, d.rate * x, detail::gamma_policy{});
        case Family::deterministic:
            return x < d.value ? 1.0 : 0.0;
        case Family::uniform:
            if (x < d.lo) return 1.0;
            if (x >= d.hi) return 0.0;
            return (d.hi - x) / (d.hi - d.lo);
    }
    throw std::logic_error("ccdf: unknown family");
}

namespace detail {
// g(x) = (1 - e^{-x})/x, g(0) = 1; stable for all x >= 0 via expm1
inline double one_minus_exp_over_x(double x) {
    if (x == 0.0) return 1.0;
    return -std::expm1(-x) / x;
}

// h(x) = (1 - e^{-x}(1+x))/x^2 = -g'(x); series below the cancellation region
inline double weighted_uniform_kernel(double x) {
    if (x < 0.05) {
        // sum_{m>=0} (m+1)(-1)^m x^m / (m+2)!
        double term = 0.5, sum = 0.5, xm = 1.0;
        for (int m = 1; m <= 9; ++m) {
            xm *= -x;
            term = (m + 1.0) * xm;
            double fact = 1.0;
            for (int j = 2; j <= m + 2; ++j) fact *= j;
            sum += term / fact;
        }
        return sum;
    }
    return (1.0 - std::exp(-x) * (1.0 + x)) / (x * x);
}
}  // namespace detail

/// Laplace transform E[e^{-sX}] for s >= 0.
inline double laplace(const DistributionSpec& d, double s) {
    if (!(s >= 0)) throw std::invalid_argument("laplace: s must be nonnegative");
    switch (d.family) {
        case Family::exponential:
            return d.rate / (d.rate + s);
        case Family::gamma:
            return std::pow(d.rate / (d.rate + s), d.shape);
        case Family::deterministic:
            return std::exp(-s * d.value);
        case Family::uniform: {
            if (s == 0.0) return 1.0;
            const double x = s * (d.hi - d.lo);
            return std::exp(-s * d.lo) * detail::one_minus_exp_over_x(x);
        }
    }
    throw std::logic_error("laplace: unknown family");
}

/// Weighted transform E[X e^{-sX}] for s >= 0 (equals -d/ds laplace).
inline double weighted_laplace(const DistributionSpec& d, double s) {
    if (!(s >= 0)) throw std::invalid_argument("weighted_laplace: s must be nonnegative");
    switch (d.family) {
        case Family::exponential:
            return d.rate / ((d.rate + s) * (d.rate + s));
        case Family::gamma:
            return (d.shape / d.rate) * std::pow(d.rate / (d.rate + s), d.shape + 1.0);
        case Family::deterministic:
            return d.value * std::exp(-s * d.value);
        case Family::uniform: {
            const double w = d.hi - d.lo;
            if (s == 0.0) return 0.5 * (d.lo + d.hi);
            const double x = s * w;
            return std::exp(-s * d.lo) *
                   (d.lo * detail::one_minus_exp_over_x(x) + w * detail::weighted_uniform_kernel(x));
        }
    }
    throw std::logic_error("weighted_laplace: unknown family");
}

/// Whether the density is log-concave (shape >= 1 for gamma; true otherwise).
inline bool is_log_concave(const DistributionSpec& d) {
    return d.family != Family::gamma || d.shape >= 1.0;
}

/// Spec for c*X, c > 0. Used for scale sweeps and homogeneity checks.
inline DistributionSpec scaled(const DistributionSpec& d, double c) {
    detail::check(c > 0 && std::isfinite(c), "scaled: factor must be positive");
    DistributionSpec r = d;
    switch (d.family) {
        case Family::exponential: r.rate = d.rate / c; break;
        case Family::gamma: r.rate = d.rate / c; break;
        case Family::deterministic: r.value = d.value * c; break;
        case Family::uniform: r.lo = d.lo * c; r.hi = d.hi * c; break;
    }
    return r;
}

inline std::string_view family_name(Family f) {
    switch (f) {
        case Family::exponential: return "exp";
        case Family::gamma: return "gamma";
        case Family::deterministic: return "det";
        case Family::uniform: return "uniform";
    }
    return "?";
}

/// Named-parameter access, used by sweeps. Valid names depend on the family:
/// rate (exp, gamma), shape (gamma), value (det), lo/hi (uniform).
inline void set_parameter(DistributionSpec& d, std::string_view name, double v) {
    auto bad = [&] {
        throw std::invalid_argument("parameter '" + std::string(name) + "' not valid for family '" +
                                    std::string(family_name(d.family)) + "'");
    };
    switch (d.family) {
        case Family::exponential:
            if (name == "rate") d.rate = v; else bad();
            break;
        case Family::gamma:
            if (name == "rate") d.rate = v;
            else if (name == "shape") d.shape = v;
            else bad();
            break;
        case Family::deterministic:
            if (name == "value") d.value = v; else bad();
            break;
        case Family::uniform:
            if (name == "lo") d.lo = v;
            else if (name == "hi") d.hi = v;
            else bad();
            break;
    }
    validate(d);
}

namespace detail {
inline std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline double parse_number(std::string_view s, const char* what) {
    double v = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last)
        throw std::invalid_argument(std::string("bad numeric value for ") + what + ": '" + std::string(s) + "'");
    return v;
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}
}  // namespace detail

/// Parse the text encoding: exp:rate=R | gamma:shape=A,rate=R | det:value=V |
/// uniform:lo=A,hi=B  (case-insensitive). Throws std::invalid_argument.
inline DistributionSpec parse_distribution(std::string_view text) {
    const std::string s = detail::lower(text);
    const auto colon = s.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("bad distribution '" + s + "': expected family:key=value[,...]");
    const std::string fam = s.substr(0, colon);

    // key=value pairs, comma separated
    double vals[2] = {0, 0};
    std::string keys[2];
    int n = 0;
    std::size_t pos = colon + 1;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const auto eq = item.find('=');
        if (eq == std::string::npos || n >= 2)
            throw std::invalid_argument("bad distribution '" + s + "'");
        keys[n] = item.substr(0, eq);
        vals[n] = detail::parse_number(std::string_view(item).substr(eq + 1), keys[n].c_str());
        ++n;
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }

    auto expect = [&](int count, std::string_view k0, std::string_view k1 = {}) {
        bool ok = n == count && keys[0] == k0 && (count < 2 || keys[1] == k1);
        if (!ok)
            throw std::invalid_argument("bad distribution '" + s + "': expected " + fam + ":" + std::string(k0) +
                                        (count == 2 ? "=...," + std::string(k1) + "=..." : "=..."));
    };

    if (fam == "exp") {
        expect(1, "rate");
        return exponential(vals[0]);
    }
    if (fam == "gamma") {
        expect(2, "shape", "rate");
        return gamma(vals[0], vals[1]);
    }
    if (fam == "det") {
        expect(1, "value");
        return deterministic(vals[0]);
    }
    if (fam == "uniform") {
        expect(2, "lo", "hi");
        return uniform(vals[0], vals[1]);
    }
    throw std::invalid_argument("unknown distribution family '" + fam + "'");
}

inline std::string encode_distribution(const DistributionSpec& d) {
    using detail::format_number;
    switch (d.family) {
        case Family::exponential: return "exp:rate=" + format_number(d.rate);
        case Family::gamma: return "gamma:shape=" + format_number(d.shape) + ",rate=" + format_number(d.rate);
        case Family::deterministic: return "det:value=" + format_number(d.value);
        case Family::uniform: return "uniform:lo=" + format_number(d.lo) + ",hi=" + format_number(d.hi);
    }
    throw std::logic_error("encode_distribution: unknown family");
}

}  // namespace aoi
