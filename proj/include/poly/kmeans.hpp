#pragma once

#include <cstdint>
#include <vector>

#include "poly/common.hpp"

namespace poly {

struct KmeansParams {
    std::uint32_t k = 256;
    std::uint32_t iters = 25;       // Lloyd iterations after seeding
    std::uint64_t seed = 1234567;
};

struct KmeansResult {
    std::vector<float> centroids;       // k * dim
    std::vector<std::uint32_t> assign;  // n
    std::vector<double> iteration_mse;  // objective before each update step
    double mse = 0.0;                   // final objective
};

/// Lloyd's algorithm with k-means++ seeding. Deterministic given the seed:
/// assignment ties go to the lowest centroid index, and a cluster left empty
/// is re-seeded with the farthest point of the largest cluster.
KmeansResult kmeans(const float* data, std::size_t n, std::size_t dim, const KmeansParams& params);

}  // namespace poly
