#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "poly/common.hpp"

namespace poly {

/// Dense row-major collection of real vectors with integer ids.
struct VectorSet {
    std::vector<float> data;       // n * dim
    std::vector<std::int64_t> ids; // size n, unique; defaults to 0..n-1
    std::size_t dim = 0;

    VectorSet() = default;
    VectorSet(std::size_t n, std::size_t d) : data(n * d, 0.0f), dim(d) {
        ids.resize(n);
        for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int64_t>(i);
    }

    std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
    const float* row(std::size_t i) const { return data.data() + i * dim; }
    float* row(std::size_t i) { return data.data() + i * dim; }

    /// Checks finiteness of every entry and uniqueness of ids.
    void validate() const;

    /// Copy of rows [0, n) with matching ids.
    VectorSet head(std::size_t n) const;
};

/// Deterministic linear preprocessing: y = R * (x - mean_shift).
struct PreprocessSpec {
    std::optional<std::vector<float>> rotation;   // dim x dim, row-major, orthogonal
    std::optional<std::vector<float>> mean_shift; // dim
};

/// Verifies R^T R = I within `tol` per entry. Throws invalid_argument otherwise.
void check_orthogonal(const std::vector<float>& rotation, std::size_t dim, double tol = 1e-4);

VectorSet apply_preprocess(const VectorSet& x, const PreprocessSpec& spec);

/// Random orthogonal matrix (QR of a Gaussian draw), row-major dim x dim.
std::vector<float> random_rotation(std::size_t dim, std::uint64_t seed);

}  // namespace poly
