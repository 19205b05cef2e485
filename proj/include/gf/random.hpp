#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "gf/geometry.hpp"

namespace gf {

using Rng = std::mt19937_64;

// Derives an independent stream from a run seed and a purpose label, so every
// stage of a pipeline draws from its own deterministic stream.
inline Rng seeded_rng(std::uint64_t seed, std::string_view purpose) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : purpose) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 1099511628211ull;
    }
    return Rng(seed ^ h);
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_unit_vector(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    while (true) {
        const Vec3 v(n(rng), n(rng), n(rng));
        if (v.norm() > 1e-6) return v.normalized();
    }
}

// Random unit vector orthogonal to `axis` (axis need not be unit).
inline Vec3 random_orthogonal_unit(Rng& rng, const Vec3& axis) {
    const Vec3 a = normalize(axis);
    while (true) {
        Vec3 v = random_unit_vector(rng);
        v -= a * a.dot(v);
        if (v.norm() > 1e-3) return v.normalized();
    }
}

}  // namespace gf
