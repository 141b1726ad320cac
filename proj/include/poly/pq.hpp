#pragma once

#include <cstdint>
#include <vector>

#include "poly/common.hpp"
#include "poly/vectors.hpp"

namespace poly {

/// Per-query table of squared sub-distances, (m, j) = ||x_m - c_{m,j}||^2,
/// indexed by centroid index j (not by stored code field).
struct LookupTable {
    std::uint32_t m = 0;
    std::uint32_t ksub = 0;
    std::vector<float> v;  // m * ksub

    const float* row(std::uint32_t sq) const { return v.data() + static_cast<std::size_t>(sq) * ksub; }
    float* row(std::uint32_t sq) { return v.data() + static_cast<std::size_t>(sq) * ksub; }
};

/// Code bit layout: sub-quantizer m occupies bit positions [m*dbits, (m+1)*dbits)
/// of a little-endian byte string, least-significant-bit first within the field.
inline std::uint32_t code_get_field(const std::uint8_t* code, std::uint32_t m, std::uint32_t dbits) {
    const std::size_t bit = static_cast<std::size_t>(m) * dbits;
    const std::size_t byte = bit >> 3;
    const unsigned shift = static_cast<unsigned>(bit & 7);
    std::uint32_t w = code[byte];
    if (shift + dbits > 8) w |= static_cast<std::uint32_t>(code[byte + 1]) << 8;
    return (w >> shift) & ((1u << dbits) - 1u);
}

inline void code_set_field(std::uint8_t* code, std::uint32_t m, std::uint32_t dbits, std::uint32_t value) {
    const std::size_t bit = static_cast<std::size_t>(m) * dbits;
    const std::size_t byte = bit >> 3;
    const unsigned shift = static_cast<unsigned>(bit & 7);
    const std::uint32_t mask = (1u << dbits) - 1u;
    std::uint32_t w = code[byte];
    if (shift + dbits > 8) w |= static_cast<std::uint32_t>(code[byte + 1]) << 8;
    w = (w & ~(mask << shift)) | ((value & mask) << shift);
    code[byte] = static_cast<std::uint8_t>(w & 0xff);
    if (shift + dbits > 8) code[byte + 1] = static_cast<std::uint8_t>((w >> 8) & 0xff);
}

/// Product quantizer: m sub-quantizers of 2^dbits centroids over dim/m
/// dimensions each, plus one index assignment (a bijection over centroid
/// indexes) per sub-quantizer. The assignment only relabels which bit pattern
/// a centroid gets; distances reconstructed through it are unchanged.
struct ProductQuantizer {
    std::uint32_t m = 0;
    std::uint32_t dbits = 0;  // bits per sub-quantizer, 1..8
    std::size_t dim = 0;
    std::vector<float> codebooks;           // m * ksub * dsub
    std::vector<std::uint16_t> perms;       // m * ksub: centroid index -> stored field
    std::vector<std::uint16_t> inv_perms;   // m * ksub: stored field -> centroid index

    std::uint32_t ksub() const { return 1u << dbits; }
    std::size_t dsub() const { return dim / m; }
    std::size_t code_bits() const { return static_cast<std::size_t>(m) * dbits; }
    std::size_t code_bytes() const { return (code_bits() + 7) / 8; }

    const float* centroid(std::uint32_t sq, std::uint32_t j) const {
        return codebooks.data() + (static_cast<std::size_t>(sq) * ksub() + j) * dsub();
    }

    const std::uint16_t* perm(std::uint32_t sq) const { return perms.data() + static_cast<std::size_t>(sq) * ksub(); }
    const std::uint16_t* inv_perm(std::uint32_t sq) const {
        return inv_perms.data() + static_cast<std::size_t>(sq) * ksub();
    }

    bool trained() const { return !codebooks.empty(); }

    /// Installs new per-sub-quantizer assignments and rebuilds the inverses.
    /// Each permutation must be a bijection on [0, ksub).
    void set_assignments(const std::vector<std::uint16_t>& new_perms);

    void encode(const float* x, std::uint8_t* code) const;
    void encode_batch(const VectorSet& x, std::uint8_t* codes, unsigned threads = 0) const;
    std::vector<float> decode(const std::uint8_t* code) const;

    LookupTable compute_lut(const float* query) const;

    /// Look-up table reindexed by stored field value, for direct scans.
    LookupTable permuted_lut(const LookupTable& lut) const;

    float adc_distance(const LookupTable& lut, const std::uint8_t* code) const;

    void validate() const;
};

struct PqTrainParams {
    std::uint32_t m = 16;
    std::uint32_t dbits = 8;
    std::uint32_t kmeans_iters = 25;
    std::uint64_t seed = 1234567;
    unsigned threads = 0;  // 0 = hardware default
};

/// Trains one k-means codebook per sub-space; assignments start as identity.
ProductQuantizer train_pq(const VectorSet& train, const PqTrainParams& params);

}  // namespace poly
