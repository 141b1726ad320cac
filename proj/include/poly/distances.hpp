#pragma once

#include <cstdint>
#include <vector>

#include "poly/common.hpp"

namespace poly {

/// Squared Euclidean distance between two vectors.
float sq_l2(const float* a, const float* b, std::size_t dim);

/// Row squared norms of an n x dim matrix.
std::vector<float> sq_norms(const float* x, std::size_t n, std::size_t dim);

/// All squared distances between rows of x (n x dim) and rows of y (m x dim),
/// written to out (n x m). Uses GEMM via ||x||^2 - 2 x.y + ||y||^2; small
/// negatives from cancellation are clamped to zero.
void pairwise_sq_l2(const float* x, std::size_t n, const float* y, std::size_t m, std::size_t dim,
                    float* out);

/// Index of the nearest row of y for each row of x, ties to the lowest index.
/// Runs blocked so the n x m distance matrix is never fully materialized.
void assign_nearest(const float* x, std::size_t n, const float* y, std::size_t m, std::size_t dim,
                    std::uint32_t* assign, float* dist_out = nullptr);

}  // namespace poly
