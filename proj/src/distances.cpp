#include "poly/distances.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>

namespace poly {

float sq_l2(const float* a, const float* b, std::size_t dim) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < dim; ++i) {
        const float d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

std::vector<float> sq_norms(const float* x, std::size_t n, std::size_t dim) {
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float* row = x + i * dim;
        float acc = 0.0f;
        for (std::size_t j = 0; j < dim; ++j) acc += row[j] * row[j];
        out[i] = acc;
    }
    return out;
}

void pairwise_sq_l2(const float* x, std::size_t n, const float* y, std::size_t m, std::size_t dim,
                    float* out) {
    if (n == 0 || m == 0) return;
    // Scalar path for tiny problems where GEMM setup dominates.
    if (n * m * dim < 4096) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                out[i * m + j] = sq_l2(x + i * dim, y + j * dim, dim);
            }
        }
        return;
    }
    const std::vector<float> xn = sq_norms(x, n, dim);
    const std::vector<float> yn = sq_norms(y, m, dim);
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(n), static_cast<int>(m),
                static_cast<int>(dim), -2.0f, x, static_cast<int>(dim), y, static_cast<int>(dim), 0.0f,
                out, static_cast<int>(m));
    for (std::size_t i = 0; i < n; ++i) {
        float* row = out + i * m;
        const float xi = xn[i];
        for (std::size_t j = 0; j < m; ++j) {
            row[j] = std::max(0.0f, row[j] + xi + yn[j]);
        }
    }
}

void assign_nearest(const float* x, std::size_t n, const float* y, std::size_t m, std::size_t dim,
                    std::uint32_t* assign, float* dist_out) {
    require(m > 0, errc::invalid_argument, "assign_nearest with no targets");
    constexpr std::size_t kBlock = 4096;
    std::vector<float> dist;
    for (std::size_t begin = 0; begin < n; begin += kBlock) {
        const std::size_t bn = std::min(kBlock, n - begin);
        dist.resize(bn * m);
        pairwise_sq_l2(x + begin * dim, bn, y, m, dim, dist.data());
        for (std::size_t i = 0; i < bn; ++i) {
            const float* row = dist.data() + i * m;
            std::uint32_t best = 0;
            float best_d = row[0];
            for (std::size_t j = 1; j < m; ++j) {
                if (row[j] < best_d) {
                    best_d = row[j];
                    best = static_cast<std::uint32_t>(j);
                }
            }
            assign[begin + i] = best;
            if (dist_out) dist_out[begin + i] = best_d;
        }
    }
}

}  // namespace poly
