#include "gravwell/kernels.hpp"

#include <algorithm>
#include <limits>

#include <omp.h>

#include "gravwell/error.hpp"

namespace gravwell::kernels {

namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw DomainError(std::string("kernel size mismatch: ") + what);
}

inline double norm_of(const double* v, std::size_t dim) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += v[k] * v[k];
    return std::sqrt(s);
}

inline double cosine_distance_one(const double* v, const double* c, double c_norm, std::size_t dim,
                                  double eps) {
    double dot = 0.0;
    for (std::size_t k = 0; k < dim; ++k) dot += v[k] * c[k];
    const double vn = norm_of(v, dim);
    if (vn == 0.0 || c_norm == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(1.0 - dot / (vn * c_norm), eps, 2.0);
}

inline double pair_one(std::span<const double> s, PairIndex p, double align) {
    return otimes_unchecked(otimes_unchecked(s[p.i], s[p.j]), align);
}

} // namespace

namespace serial {

void otimes(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    require_same(a.size(), b.size(), "otimes inputs");
    require_same(a.size(), out.size(), "otimes output");
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = otimes_unchecked(a[k], b[k]);
}

void pair_contributions(std::span<const double> support, std::span<const PairIndex> pairs,
                        std::span<const double> alignment, std::span<double> out) {
    require_same(pairs.size(), alignment.size(), "pair alignment");
    require_same(pairs.size(), out.size(), "pair output");
    for (std::size_t k = 0; k < pairs.size(); ++k) out[k] = pair_one(support, pairs[k], alignment[k]);
}

void pull_forces(std::span<const double> m_user, std::span<const double> d, double scale,
                 std::span<double> out) {
    require_same(m_user.size(), d.size(), "force inputs");
    require_same(m_user.size(), out.size(), "force output");
    for (std::size_t k = 0; k < d.size(); ++k) out[k] = scale * m_user[k] / (d[k] * d[k]);
}

void cosine_distances(std::span<const double> vectors, std::size_t dim,
                      std::span<const double> centroid, double eps, std::span<double> out) {
    require_same(centroid.size(), dim, "centroid dim");
    require_same(vectors.size(), out.size() * dim, "vector block");
    const double cn = norm_of(centroid.data(), dim);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = cosine_distance_one(vectors.data() + k * dim, centroid.data(), cn, dim, eps);
    }
}

} // namespace serial

namespace omp {

void otimes(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    require_same(a.size(), b.size(), "otimes inputs");
    require_same(a.size(), out.size(), "otimes output");
    const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = otimes_unchecked(a[k], b[k]);
}

void pair_contributions(std::span<const double> support, std::span<const PairIndex> pairs,
                        std::span<const double> alignment, std::span<double> out) {
    require_same(pairs.size(), alignment.size(), "pair alignment");
    require_same(pairs.size(), out.size(), "pair output");
    const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = pair_one(support, pairs[k], alignment[k]);
}

void pull_forces(std::span<const double> m_user, std::span<const double> d, double scale,
                 std::span<double> out) {
    require_same(m_user.size(), d.size(), "force inputs");
    require_same(m_user.size(), out.size(), "force output");
    const auto n = static_cast<std::ptrdiff_t>(d.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = scale * m_user[k] / (d[k] * d[k]);
}

void cosine_distances(std::span<const double> vectors, std::size_t dim,
                      std::span<const double> centroid, double eps, std::span<double> out) {
    require_same(centroid.size(), dim, "centroid dim");
    require_same(vectors.size(), out.size() * dim, "vector block");
    const double cn = norm_of(centroid.data(), dim);
    const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        out[k] = cosine_distance_one(vectors.data() + k * dim, centroid.data(), cn, dim, eps);
    }
}

} // namespace omp

void set_num_threads(int n) {
    static const int default_threads = omp_get_max_threads();
    omp_set_num_threads(n > 0 ? n : default_threads);
}

int max_threads() { return omp_get_max_threads(); }

} // namespace gravwell::kernels
