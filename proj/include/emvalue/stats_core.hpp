#pragma once

// Scalar distribution primitives and the counter-based random number facility
// shared by every stochastic routine in the library.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace emvalue {

/// A probability strictly inside (0, 1), the domain of the normal quantile.
class Probability {
public:
    explicit Probability(double value) : value_(value) {
        if (!(value > 0.0 && value < 1.0)) {
            throw std::domain_error("probability must lie in (0, 1), got " + std::to_string(value));
        }
    }
    [[nodiscard]] double value() const noexcept { return value_; }

private:
    double value_;
};

inline double std_normal_pdf(double x) {
    if (!std::isfinite(x)) {
        throw std::domain_error("std_normal_pdf: non-finite input");
    }
    constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double std_normal_cdf(double x) {
    if (std::isnan(x)) {
        throw std::domain_error("std_normal_cdf: NaN input");
    }
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

namespace detail {

// Lower-half quantile, p in (0, 0.5]. Acklam's rational approximation
// (relative error < 1.2e-9) followed by one Halley step against erfc, which
// brings the absolute error to the level of double rounding.
inline double lower_normal_quantile(double p) {
    static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                             -2.759285104469687e+02, 1.383577518672690e+02,
                                             -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                             -1.556989798598866e+02, 6.680131188771972e+01,
                                             -1.328068155288572e+01};
    static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                             -2.400758277161838e+00, -2.549732539343734e+00,
                                             4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                             2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }

    constexpr double sqrt_2pi = 2.50662827463100050241576528481;
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * sqrt_2pi * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace detail

/// Standard normal quantile. Antisymmetric by construction: the upper half is
/// evaluated as the negated lower half at 1 - p.
inline double std_normal_quantile(Probability p) {
    const double v = p.value();
    if (v == 0.5) {
        return 0.0;
    }
    if (v > 0.5) {
        return -detail::lower_normal_quantile(1.0 - v);
    }
    return detail::lower_normal_quantile(v);
}

inline double std_normal_quantile(double p) { return std_normal_quantile(Probability(p)); }

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer, used to derive seeds from (seed, label) pairs.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) noexcept {
    return mix64(mix64(seed) ^ (label * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

/// Immutable descriptor of a random sequence. Identical (seed, stream_id)
/// yields an identical sequence.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    friend bool operator==(const RngStream&, const RngStream&) = default;
};

/// Philox4x32-10 counter-based generator. The 128-bit counter is laid out as
/// (block, lane, stream_lo, stream_hi) and the key is the 64-bit seed, so
/// every (seed, stream, lane) triple addresses its own independent sequence
/// of 2^34 32-bit words without any shared state.
class PhiloxEngine {
public:
    using result_type = std::uint32_t;

    explicit PhiloxEngine(RngStream stream, std::uint32_t lane = 0) noexcept
        : key_{static_cast<std::uint32_t>(stream.seed), static_cast<std::uint32_t>(stream.seed >> 32)},
          counter_{0, lane, static_cast<std::uint32_t>(stream.stream_id),
                   static_cast<std::uint32_t>(stream.stream_id >> 32)} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (position_ == 4) {
            refill();
        }
        return buffer_[position_++];
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t hi = (*this)();
        return (hi << 32) | (*this)();
    }

    /// Uniform double in the open interval (0, 1) with 53 bits of resolution.
    double uniform_open() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform double in [0, 1).
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unbiased integer in [0, bound) (Lemire's multiply-and-reject).
    std::uint64_t below(std::uint64_t bound) noexcept {
        if (bound <= 1) {
            return 0;
        }
        if (bound <= 0xFFFFFFFFULL) {
            const auto b32 = static_cast<std::uint32_t>(bound);
            std::uint64_t m = static_cast<std::uint64_t>((*this)()) * b32;
            auto low = static_cast<std::uint32_t>(m);
            if (low < b32) {
                const std::uint32_t threshold = static_cast<std::uint32_t>(-b32) % b32;
                while (low < threshold) {
                    m = static_cast<std::uint64_t>((*this)()) * b32;
                    low = static_cast<std::uint32_t>(m);
                }
            }
            return m >> 32;
        }
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t v = next_u64();
        while (v >= limit) {
            v = next_u64();
        }
        return v % bound;
    }

    /// Standard normal variate (Box-Muller; the second value of each pair is cached).
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Gamma(shape, 1) variate for shape >= 1 (Marsaglia-Tsang).
    double gamma(double shape) noexcept {
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_open();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) {
                return d * v;
            }
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
                return d * v;
            }
        }
    }

    /// Standard Student-t with dof > 2, as Z / sqrt(chi2_dof / dof).
    double student_t(double dof) noexcept {
        const double z = normal();
        const double chi2 = 2.0 * gamma(0.5 * dof);
        return z / std::sqrt(chi2 / dof);
    }

private:
    void refill() noexcept {
        std::array<std::uint32_t, 4> ctr = counter_;
        std::array<std::uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53U) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57U) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += 0x9E3779B9U;
            key[1] += 0xBB67AE85U;
        }
        buffer_ = ctr;
        position_ = 0;
        ++counter_[0];
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> buffer_{};
    int position_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Location-scale Student-t: mu + sigma * T_dof.
struct GeneralizedT {
    double dof = 3.0;
    double location = 0.0;
    double scale = 1.0;

    void validate() const {
        if (!(dof > 2.0) || !std::isfinite(dof)) {
            throw std::domain_error("generalized t: degrees of freedom must exceed 2");
        }
        if (!(scale >= 0.0) || !std::isfinite(scale) || !std::isfinite(location)) {
            throw std::domain_error("generalized t: scale must be finite and >= 0");
        }
    }

    /// Factor applied to the scale so that the draw variance equals scale^2.
    [[nodiscard]] double variance_matching_factor() const { return std::sqrt((dof - 2.0) / dof); }
};

inline std::vector<double> sample_normal(RngStream rng, double mean, double variance, std::size_t count) {
    if (!(variance >= 0.0) || !std::isfinite(variance) || !std::isfinite(mean)) {
        throw std::domain_error("sample_normal: variance must be finite and >= 0");
    }
    PhiloxEngine engine(rng);
    const double sd = std::sqrt(variance);
    std::vector<double> out(count);
    for (auto& x : out) {
        x = sd == 0.0 ? mean : mean + sd * engine.normal();
    }
    return out;
}

inline std::vector<double> sample_generalized_t(RngStream rng, const GeneralizedT& dist, std::size_t count,
                                                bool match_variance) {
    dist.validate();
    PhiloxEngine engine(rng);
    const double scale = match_variance ? dist.scale * dist.variance_matching_factor() : dist.scale;
    std::vector<double> out(count);
    for (auto& x : out) {
        x = scale == 0.0 ? dist.location : dist.location + scale * engine.student_t(dist.dof);
    }
    return out;
}

}  // namespace emvalue
