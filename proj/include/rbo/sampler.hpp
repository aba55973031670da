#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "rbo/kernel.hpp"

namespace rbo {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class StreamMode { sobol, pseudorandom };

/// Description of an n x dim block of random numbers. Materializing the same
/// description twice gives bit-identical output.
struct QmcStream {
    Index dim = 1;
    Index n = 1;
    std::uint64_t seed = 0;
    StreamMode mode = StreamMode::sobol;
    bool scramble = true;  ///< Owen scrambling keyed by seed (Sobol mode only)
};

/// Largest dimension covered by the Sobol direction-number table.
Index sobol_max_dim();

/// n x dim uniforms in [0, 1). Sobol mode returns the first n points in natural order.
RowMatrix uniform_points(const QmcStream& stream);

/// Box-Muller on consecutive column pairs. Entries are clamped to [1e-12, 1 - 1e-12]
/// first. The number of columns must be even.
RowMatrix gaussianize(const RowMatrix& u);

/// n x dim standard normals: uniforms are drawn with an even width and the surplus
/// column of the last pair is dropped.
RowMatrix gaussian_points(const QmcStream& stream);

}  // namespace rbo
