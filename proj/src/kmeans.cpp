#include "poly/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "poly/distances.hpp"

namespace poly {

namespace {

// k-means++: first centroid uniform, then D^2 sampling.
std::vector<float> seed_centroids(const float* data, std::size_t n, std::size_t dim, std::uint32_t k,
                                  Rng& rng) {
    std::vector<float> centroids(static_cast<std::size_t>(k) * dim);
    std::vector<double> min_d2(n);
    const std::size_t first = static_cast<std::size_t>(rng.below(n));
    std::memcpy(centroids.data(), data + first * dim, dim * sizeof(float));
    for (std::size_t i = 0; i < n; ++i) {
        min_d2[i] = sq_l2(data + i * dim, centroids.data(), dim);
    }
    for (std::uint32_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : min_d2) total += v;
        std::size_t pick;
        if (total <= 0.0) {
            // all remaining mass at existing centroids (duplicate points)
            pick = static_cast<std::size_t>(rng.below(n));
        } else {
            double target = rng.u01() * total;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                target -= min_d2[i];
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        float* dst = centroids.data() + static_cast<std::size_t>(c) * dim;
        std::memcpy(dst, data + pick * dim, dim * sizeof(float));
        for (std::size_t i = 0; i < n; ++i) {
            const double d2 = sq_l2(data + i * dim, dst, dim);
            if (d2 < min_d2[i]) min_d2[i] = d2;
        }
    }
    return centroids;
}

}  // namespace

KmeansResult kmeans(const float* data, std::size_t n, std::size_t dim, const KmeansParams& params) {
    require(n > 0, errc::invalid_argument, "kmeans on empty data");
    require(params.k > 0, errc::invalid_argument, "kmeans with k=0");
    const std::uint32_t k = params.k;

    Rng rng(params.seed);
    KmeansResult res;
    if (n <= k) {
        // Every point becomes a centroid; surplus cells replicate points
        // cyclically so the codebook stays full.
        res.centroids.resize(static_cast<std::size_t>(k) * dim);
        for (std::uint32_t c = 0; c < k; ++c) {
            std::memcpy(res.centroids.data() + static_cast<std::size_t>(c) * dim,
                        data + (c % n) * dim, dim * sizeof(float));
        }
        res.assign.resize(n);
        for (std::size_t i = 0; i < n; ++i) res.assign[i] = static_cast<std::uint32_t>(i);
        res.mse = 0.0;
        return res;
    }

    res.centroids = seed_centroids(data, n, dim, k, rng);
    res.assign.resize(n);
    std::vector<float> best_d(n);
    std::vector<std::size_t> counts(k);
    std::vector<double> sums(static_cast<std::size_t>(k) * dim);

    for (std::uint32_t iter = 0; iter < params.iters; ++iter) {
        assign_nearest(data, n, res.centroids.data(), k, dim, res.assign.data(), best_d.data());
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) obj += best_d[i];
        res.mse = obj / static_cast<double>(n);
        res.iteration_mse.push_back(res.mse);

        std::fill(counts.begin(), counts.end(), 0);
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t c = res.assign[i];
            ++counts[c];
            const float* row = data + i * dim;
            double* s = sums.data() + static_cast<std::size_t>(c) * dim;
            for (std::size_t j = 0; j < dim; ++j) s[j] += row[j];
        }
        for (std::uint32_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            float* dst = res.centroids.data() + static_cast<std::size_t>(c) * dim;
            const double* s = sums.data() + static_cast<std::size_t>(c) * dim;
            const double inv = 1.0 / static_cast<double>(counts[c]);
            for (std::size_t j = 0; j < dim; ++j) dst[j] = static_cast<float>(s[j] * inv);
        }

        // Empty cells: steal the farthest member of the currently largest
        // cluster. Processing cells in ascending index keeps this deterministic.
        for (std::uint32_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::uint32_t big = 0;
            for (std::uint32_t o = 1; o < k; ++o) {
                if (counts[o] > counts[big]) big = o;
            }
            if (counts[big] == 0) break;  // fewer distinct points than cells
            const float* bc = res.centroids.data() + static_cast<std::size_t>(big) * dim;
            std::size_t far = static_cast<std::size_t>(-1);
            float far_d = -1.0f;
            for (std::size_t i = 0; i < n; ++i) {
                if (res.assign[i] != big) continue;
                const float d2 = sq_l2(data + i * dim, bc, dim);
                if (d2 > far_d) {
                    far_d = d2;
                    far = i;
                }
            }
            std::memcpy(res.centroids.data() + static_cast<std::size_t>(c) * dim, data + far * dim,
                        dim * sizeof(float));
            res.assign[far] = c;
            counts[c] = 1;
            --counts[big];
        }
    }

    assign_nearest(data, n, res.centroids.data(), k, dim, res.assign.data(), best_d.data());
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += best_d[i];
    res.mse = obj / static_cast<double>(n);
    return res;
}

}  // namespace poly
