#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace sabrdnn {

// Philox4x32-10 (Salmon et al.), counter-based: output depends only on (counter, key).
struct Philox4x32 {
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static inline void round(std::uint32_t& c0, std::uint32_t& c1, std::uint32_t& c2, std::uint32_t& c3,
                             std::uint32_t k0, std::uint32_t k1) {
        const std::uint64_t p0 = std::uint64_t(kMul0) * c0;
        const std::uint64_t p1 = std::uint64_t(kMul1) * c2;
        const std::uint32_t n0 = std::uint32_t(p1 >> 32) ^ c1 ^ k0;
        const std::uint32_t n1 = std::uint32_t(p1);
        const std::uint32_t n2 = std::uint32_t(p0 >> 32) ^ c3 ^ k1;
        const std::uint32_t n3 = std::uint32_t(p0);
        c0 = n0;
        c1 = n1;
        c2 = n2;
        c3 = n3;
    }

    static inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> c,
                                                     std::array<std::uint32_t, 2> k) {
        for (int r = 0; r < 10; ++r) {
            round(c[0], c[1], c[2], c[3], k[0], k[1]);
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        return c;
    }
};

// Open-interval uniform from 32 random bits.
inline double u01_open(std::uint32_t bits) { return (double(bits) + 0.5) * 0x1p-32; }

// Wichura's AS241 (PPND16) inverse normal CDF, relative accuracy about 1e-16.
inline double inverse_norm_cdf(double p) {
    const double q = p - 0.5;
    const double r = 0.180625 - q * q;
    const double central =
        q *
        (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
             45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
          133.14166789178437745) * r + 3.387132872796366608) /
        (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
             21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
          42.313330701600911252) * r + 1.0);
    const double pm = q < 0.0 ? p : 1.0 - p;
    const double t = std::sqrt(-std::log(pm));
    const double t1 = t - 1.6;
    const double t2 = t - 5.0;
    const double mid =
        (((((((t1 * 7.7454501427834140764e-4 + .0227238449892691845833) * t1 + .24178072517745061177) * t1 +
             1.27045825245236838258) * t1 + 3.64784832476320460504) * t1 + 5.7694972214606914055) * t1 +
          4.6303378461565452959) * t1 + 1.42343711074968357734) /
        (((((((t1 * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * t1 + .0151986665636164571966) * t1 +
             .14810397642748007459) * t1 + .68976733498510000455) * t1 + 1.6763848301838038494) * t1 +
          2.05319162663775882187) * t1 + 1.0);
    const double far =
        (((((((t2 * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * t2 + .0012426609473880784386) * t2 +
             .026532189526576123093) * t2 + .29656057182850489123) * t2 + 1.7848265399172913358) * t2 +
          5.4637849111641143699) * t2 + 6.6579046435011037772) /
        (((((((t2 * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * t2 + 1.8463183175100546818e-5) * t2 +
             7.868691311456132591e-4) * t2 + .0148753612908506148525) * t2 + .13692988092273580531) * t2 +
          .59983220655588793769) * t2 + 1.0);
    double tail = t <= 5.0 ? mid : far;
    tail = q < 0.0 ? -tail : tail;
    return std::fabs(q) <= 0.425 ? central : tail;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Independent 64-bit seed for sub-stream `index` under tag `tag`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return splitmix64(splitmix64(seed ^ splitmix64(tag)) + index);
}

// Sequential uniforms from a Philox stream; portable across platforms, unlike <random> distributions.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)} {}

    // Uniform on [0,1) with 53 random bits.
    double next() {
        const std::uint64_t hi = draw(), lo = draw();
        return double(((hi << 32) | lo) >> 11) * 0x1p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }

    // Integer in [0, n), n >= 1.
    std::uint64_t below(std::uint64_t n) { return std::uint64_t(next() * double(n)) % n; }

private:
    std::uint32_t draw() {
        if (used_ == 4) {
            buf_ = Philox4x32::block({std::uint32_t(ctr_), std::uint32_t(ctr_ >> 32), 0x5eedu, 0u}, key_);
            ++ctr_;
            used_ = 0;
        }
        return buf_[used_++];
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> buf_{};
    std::uint64_t ctr_ = 0;
    int used_ = 4;
};

}  // namespace sabrdnn
