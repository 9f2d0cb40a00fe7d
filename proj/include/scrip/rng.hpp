#pragma once

#include <cstdint>
#include <span>

#include "scrip/error.hpp"
#include "scrip/rational.hpp"

namespace scrip {

// Counter-based random stream: output i is a hash of (key, i), so streams fork
// cheaply and deterministically. A run owns one root stream; the driver forks
// one child per round (and per concern inside the initializer), which keeps
// paired runs with common random numbers aligned round by round even after
// their trajectories diverge.
class CounterRng {
  public:
    explicit CounterRng(uint64_t seed) : key_(mix(seed ^ 0x8f1bbcdcbfa53e0bULL)) {}

    CounterRng fork(uint64_t a, uint64_t b = 0) const {
        CounterRng child(from_key{}, mix(key_ ^ mix(a ^ 0xd6e8feb86659fd93ULL) ^ (mix(b ^ 0xa5a5a5a5a5a5a5a5ULL) << 1)));
        return child;
    }

    uint64_t next() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    // Unbiased uniform integer in [0, n) (Lemire multiply-shift with rejection).
    uint64_t below(uint64_t n) {
        if (n == 0) throw EmptyPool("uniform draw from empty range");
        using u128 = unsigned __int128;
        uint64_t x = next();
        u128 m = static_cast<u128>(x) * n;
        auto low = static_cast<uint64_t>(m);
        if (low < n) {
            uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = next();
                m = static_cast<u128>(x) * n;
                low = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    // Exact Bernoulli for rational probabilities: success iff a uniform draw
    // from {0..q-1} lands below p. No floating point involved.
    bool bernoulli(const Rational& p) {
        if (p.num() <= 0) return false;
        if (p.num() >= p.den()) return true;
        return below(static_cast<uint64_t>(p.den())) < static_cast<uint64_t>(p.num());
    }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return unit_real() < p;
    }

    double unit_real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    struct from_key {};
    CounterRng(from_key, uint64_t key) : key_(key) {}

    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    uint64_t key_ = 0;
    uint64_t counter_ = 0;
};

// Uniform pick from a nonempty pool; every element has probability 1/|pool|.
template <class T, class R>
T uniform_choice(std::span<const T> pool, R& rng) {
    if (pool.empty()) throw EmptyPool("uniform_choice on empty pool");
    return pool[static_cast<size_t>(rng.below(pool.size()))];
}

}  // namespace scrip
