#include "rbo/sampler.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "rbo/errors.hpp"
#include "rbo/random.hpp"
#include "sobol_table.hpp"

namespace rbo {

namespace {

constexpr int kBits = 32;

using Directions = std::array<std::uint32_t, kBits>;

Directions directions(std::size_t dim) {
    const detail::SobolPoly& p = detail::kSobolTable[dim];
    Directions v{};
    if (p.degree == 0) {
        for (int k = 0; k < kBits; ++k) v[static_cast<std::size_t>(k)] = 1u << (kBits - 1 - k);
        return v;
    }
    const int s = static_cast<int>(p.degree);
    for (int k = 0; k < std::min(s, kBits); ++k) {
        v[static_cast<std::size_t>(k)] = p.m[static_cast<std::size_t>(k)] << (kBits - 1 - k);
    }
    for (int k = s; k < kBits; ++k) {
        std::uint32_t x = v[static_cast<std::size_t>(k - s)];
        x ^= x >> s;
        for (int j = 1; j < s; ++j) {
            if ((p.coeffs >> (s - 1 - j)) & 1u) x ^= v[static_cast<std::size_t>(k - j)];
        }
        v[static_cast<std::size_t>(k)] = x;
    }
    return v;
}

std::uint32_t reverse_bits(std::uint32_t x) {
    x = ((x >> 1) & 0x55555555u) | ((x & 0x55555555u) << 1);
    x = ((x >> 2) & 0x33333333u) | ((x & 0x33333333u) << 2);
    x = ((x >> 4) & 0x0f0f0f0fu) | ((x & 0x0f0f0f0fu) << 4);
    x = ((x >> 8) & 0x00ff00ffu) | ((x & 0x00ff00ffu) << 8);
    return (x >> 16) | (x << 16);
}

// Laine-Karras style hash: each output bit depends only on the input bits below it,
// so applied to bit-reversed values it is a nested uniform (Owen) scramble.
std::uint32_t owen_scramble(std::uint32_t x, std::uint32_t seed) {
    x = reverse_bits(x);
    x += seed;
    x ^= x * 0x6c50b47cu;
    x ^= x * 0xb82f1e52u;
    x ^= x * 0xc7afe638u;
    x ^= x * 0x8d22f6e6u;
    return reverse_bits(x);
}

void check(const QmcStream& s) {
    if (s.dim < 1 || s.n < 1) throw ContractViolation("sampler: dim and n must be at least 1");
}

}  // namespace

Index sobol_max_dim() { return static_cast<Index>(detail::kSobolMaxDim); }

RowMatrix uniform_points(const QmcStream& stream) {
    check(stream);
    RowMatrix u(stream.n, stream.dim);
    if (stream.mode == StreamMode::pseudorandom) {
        Rng rng(stream.seed);
        for (Index i = 0; i < stream.n; ++i) {
            for (Index c = 0; c < stream.dim; ++c) u(i, c) = uniform01(rng);
        }
        return u;
    }
    if (stream.dim > sobol_max_dim()) {
        throw UnsupportedDimension("sampler: Sobol dimension " + std::to_string(stream.dim) +
                                   " exceeds the table size " + std::to_string(sobol_max_dim()));
    }
    if (stream.n > (Index{1} << kBits)) throw ContractViolation("sampler: too many Sobol points");
    for (Index c = 0; c < stream.dim; ++c) {
        const Directions v = directions(static_cast<std::size_t>(c));
        const auto key = static_cast<std::uint32_t>(mix_seed(stream.seed, static_cast<std::uint64_t>(c)));
        for (Index i = 0; i < stream.n; ++i) {
            std::uint32_t x = 0;
            auto idx = static_cast<std::uint64_t>(i);
            for (int k = 0; idx != 0; ++k, idx >>= 1) {
                if (idx & 1u) x ^= v[static_cast<std::size_t>(k)];
            }
            if (stream.scramble) x = owen_scramble(x, key);
            u(i, c) = static_cast<double>(x) * 0x1.0p-32;
        }
    }
    return u;
}

RowMatrix gaussianize(const RowMatrix& u) {
    if (u.cols() % 2 != 0) throw ContractViolation("gaussianize: column count must be even");
    constexpr double kClamp = 1e-12;
    RowMatrix z(u.rows(), u.cols());
    for (Index i = 0; i < u.rows(); ++i) {
        for (Index c = 0; c < u.cols(); c += 2) {
            const double u1 = std::clamp(u(i, c), kClamp, 1.0 - kClamp);
            const double u2 = std::clamp(u(i, c + 1), kClamp, 1.0 - kClamp);
            const double r = std::sqrt(-2.0 * std::log(u1));
            z(i, c) = r * std::cos(2.0 * std::numbers::pi * u2);
            z(i, c + 1) = r * std::sin(2.0 * std::numbers::pi * u2);
        }
    }
    return z;
}

RowMatrix gaussian_points(const QmcStream& stream) {
    check(stream);
    QmcStream padded = stream;
    padded.dim = stream.dim + (stream.dim % 2);
    return gaussianize(uniform_points(padded)).leftCols(stream.dim);
}

}  // namespace rbo
