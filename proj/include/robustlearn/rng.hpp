#ifndef ROBUSTLEARN_RNG_HPP
#define ROBUSTLEARN_RNG_HPP

#include <cmath>
#include <cstdint>

namespace robustlearn {

namespace detail {
// SplitMix64 finalizer. Used both as the per-counter output function and to
// derive substream keys.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Counter-based pseudo-random generator.
///
/// Each draw is mix64(key + counter), so the stream is a pure function of
/// (seed, counter) and generation is bitwise reproducible across runs and
/// platforms. Substreams follow a documented splitting rule:
/// substream(i) has key mix64(key ^ mix64(i + 0x5851f42d4c957f2d)), giving one
/// independent stream per trial in parallel sweeps.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(detail::mix64(seed)) {}

    std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_)); }

    /// Derive an independent substream; does not advance this stream.
    Rng substream(std::uint64_t id) const {
        return Rng(key_ ^ detail::mix64(id + 0x5851f42d4c957f2dULL), 0);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1]; safe as a log() argument.
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; one spare value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Exact Binomial(n, p) as a sum of Bernoulli draws.
    long binomial(long n, double p) {
        long k = 0;
        for (long i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
        return k;
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Multiply-shift; bias is negligible for n << 2^64.
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    Rng(std::uint64_t raw_key, int) : key_(raw_key) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace robustlearn

#endif
