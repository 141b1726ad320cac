#include "poly/vectors.hpp"

#include <cblas.h>

#include <cmath>
#include <cstring>
#include <unordered_set>

namespace poly {

void VectorSet::validate() const {
    require(dim > 0 || data.empty(), errc::invalid_argument, "vector set with zero dim but nonempty data");
    require(dim == 0 || data.size() % dim == 0, errc::invalid_argument, "data size not a multiple of dim");
    require(ids.size() == size(), errc::invalid_argument, "ids count does not match vector count");
    for (float v : data) {
        require(std::isfinite(v), errc::invalid_argument, "non-finite entry in vector set");
    }
    std::unordered_set<std::int64_t> seen;
    seen.reserve(ids.size());
    for (auto id : ids) {
        require(seen.insert(id).second, errc::invalid_argument,
                "duplicate id " + std::to_string(id) + " in vector set");
    }
}

VectorSet VectorSet::head(std::size_t n) const {
    n = std::min(n, size());
    VectorSet out;
    out.dim = dim;
    out.data.assign(data.begin(), data.begin() + n * dim);
    out.ids.assign(ids.begin(), ids.begin() + n);
    return out;
}

void check_orthogonal(const std::vector<float>& rotation, std::size_t dim, double tol) {
    require(rotation.size() == dim * dim, errc::invalid_argument, "rotation matrix has wrong size");
    // Gram matrix R^T R, compared entrywise against the identity.
    std::vector<float> gram(dim * dim, 0.0f);
    cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(dim), static_cast<int>(dim),
                static_cast<int>(dim), 1.0f, rotation.data(), static_cast<int>(dim), rotation.data(),
                static_cast<int>(dim), 0.0f, gram.data(), static_cast<int>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            if (std::abs(gram[i * dim + j] - want) > tol) {
                fail(errc::invalid_argument, "rotation matrix is not orthogonal (R^T R deviates at entry " +
                                                 std::to_string(i) + "," + std::to_string(j) + ")");
            }
        }
    }
}

VectorSet apply_preprocess(const VectorSet& x, const PreprocessSpec& spec) {
    const std::size_t n = x.size();
    const std::size_t d = x.dim;
    if (spec.mean_shift) {
        require(spec.mean_shift->size() == d, errc::invalid_argument, "mean_shift dimension mismatch");
    }
    if (spec.rotation) {
        check_orthogonal(*spec.rotation, d);
    }

    VectorSet out;
    out.dim = d;
    out.ids = x.ids;
    std::vector<float> shifted;
    const float* src = x.data.data();
    if (spec.mean_shift) {
        shifted.resize(n * d);
        const float* mu = spec.mean_shift->data();
        for (std::size_t i = 0; i < n; ++i) {
            const float* in = x.row(i);
            float* o = shifted.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) o[j] = in[j] - mu[j];
        }
        src = shifted.data();
    }
    if (spec.rotation) {
        out.data.assign(n * d, 0.0f);
        if (n > 0) {
            // y_i = R x_i for row vectors: Y = X R^T.
            cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(n), static_cast<int>(d),
                        static_cast<int>(d), 1.0f, src, static_cast<int>(d), spec.rotation->data(),
                        static_cast<int>(d), 0.0f, out.data.data(), static_cast<int>(d));
        }
    } else {
        out.data.assign(src, src + n * d);
    }
    return out;
}

std::vector<float> random_rotation(std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    // Gaussian matrix via Box-Muller, then modified Gram-Schmidt in double.
    std::vector<double> a(dim * dim);
    for (std::size_t i = 0; i < a.size(); i += 2) {
        double u1 = rng.u01();
        while (u1 <= 0.0) u1 = rng.u01();
        const double u2 = rng.u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        a[i] = r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < a.size()) a[i + 1] = r * std::sin(2.0 * M_PI * u2);
    }
    for (std::size_t col = 0; col < dim; ++col) {
        for (std::size_t prev = 0; prev < col; ++prev) {
            double dot = 0.0;
            for (std::size_t r = 0; r < dim; ++r) dot += a[r * dim + col] * a[r * dim + prev];
            for (std::size_t r = 0; r < dim; ++r) a[r * dim + col] -= dot * a[r * dim + prev];
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < dim; ++r) norm += a[r * dim + col] * a[r * dim + col];
        norm = std::sqrt(norm);
        require(norm > 1e-12, errc::internal, "degenerate column in rotation sampling");
        for (std::size_t r = 0; r < dim; ++r) a[r * dim + col] /= norm;
    }
    std::vector<float> out(dim * dim);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(a[i]);
    return out;
}

}  // namespace poly
