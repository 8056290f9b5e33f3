#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <variant>

#include "kinit/matrix.hpp"

namespace kinit {

enum class Engine { mt19937_64, mt19937 };

inline std::string_view to_string(Engine e) {
    return e == Engine::mt19937 ? "mt19937" : "mt19937_64";
}

inline Engine parse_engine(std::string_view name) {
    if (name == "mt19937_64") return Engine::mt19937_64;
    if (name == "mt19937") return Engine::mt19937;
    throw Error("unknown generator '" + std::string(name) + "' (expected mt19937 or mt19937_64)");
}

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of run `index` in a stream rooted at `base`. Runs are independent of
/// each other and of the order in which they are executed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix64(base ^ mix64(index + 1));
}

/// Seeded generator with platform-independent derived distributions.
///
/// The standard library distributions are implementation-defined, so uniform
/// integers, uniform reals and normals are derived here from raw engine words.
/// Identical (engine, seed) pairs produce identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed, Engine engine = Engine::mt19937_64) : seed_(seed) {
        if (engine == Engine::mt19937) {
            engine_.emplace<std::mt19937>(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
        } else {
            engine_.emplace<std::mt19937_64>(seed);
        }
    }

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() {
        if (auto* e = std::get_if<std::mt19937>(&engine_)) {
            const std::uint64_t hi = (*e)();
            const std::uint64_t lo = (*e)();
            return (hi << 32) | lo;
        }
        return std::get<std::mt19937_64>(engine_)();
    }

    /// Uniform integer in [0, n). Unbiased (Lemire's multiply-and-reject).
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw Error("uniform_index: empty range");
        __extension__ using u128 = unsigned __int128;
        u128 m = static_cast<u128>(next_u64()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<u128>(next_u64()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    template <class It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = uniform_index(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::variant<std::mt19937_64, std::mt19937> engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace kinit
