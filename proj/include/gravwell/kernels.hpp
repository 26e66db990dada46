#pragma once

// Data-parallel inner loops. Each kernel exists twice: `serial` is the
// reference kept for testing, `omp` is the OpenMP version used by the
// pipeline. Both write element i from inputs i only, so their outputs are
// bitwise identical.

#include <cmath>
#include <cstddef>
#include <span>

namespace gravwell::kernels {

// (ab)(1 - ln|ab|), 0 when ab == 0. No domain checks.
inline double otimes_unchecked(double a, double b) noexcept {
    const double p = a * b;
    if (p == 0.0) return 0.0;
    return p * (1.0 - std::log(std::abs(p)));
}

struct PairIndex {
    std::size_t i = 0;
    std::size_t j = 0;
};

namespace serial {

void otimes(std::span<const double> a, std::span<const double> b, std::span<double> out);

// out[k] = (sup[i] (x) sup[j]) (x) align[k] for pairs[k] = (i, j).
void pair_contributions(std::span<const double> support, std::span<const PairIndex> pairs,
                        std::span<const double> alignment, std::span<double> out);

// out[k] = scale * m_user[k] / d[k]^2
void pull_forces(std::span<const double> m_user, std::span<const double> d, double scale,
                 std::span<double> out);

// vectors: row-major count x dim. out[k] = clamp(1 - cos(v_k, c), eps, 2).
// Zero-norm rows yield NaN.
void cosine_distances(std::span<const double> vectors, std::size_t dim,
                      std::span<const double> centroid, double eps, std::span<double> out);

} // namespace serial

namespace omp {

void otimes(std::span<const double> a, std::span<const double> b, std::span<double> out);
void pair_contributions(std::span<const double> support, std::span<const PairIndex> pairs,
                        std::span<const double> alignment, std::span<double> out);
void pull_forces(std::span<const double> m_user, std::span<const double> d, double scale,
                 std::span<double> out);
void cosine_distances(std::span<const double> vectors, std::size_t dim,
                      std::span<const double> centroid, double eps, std::span<double> out);

} // namespace omp

// Thread count used by the omp kernels; 0 restores the runtime default.
void set_num_threads(int n);
int max_threads();

} // namespace gravwell::kernels
