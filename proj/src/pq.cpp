#include "poly/pq.hpp"

#include <algorithm>
#include <cstring>

#include "poly/distances.hpp"
#include "poly/kmeans.hpp"

namespace poly {

void ProductQuantizer::set_assignments(const std::vector<std::uint16_t>& new_perms) {
    const std::size_t want = static_cast<std::size_t>(m) * ksub();
    require(new_perms.size() == want, errc::invalid_argument, "assignment table has wrong size");
    std::vector<std::uint16_t> inv(want, 0xffff);
    for (std::uint32_t sq = 0; sq < m; ++sq) {
        const std::uint16_t* p = new_perms.data() + static_cast<std::size_t>(sq) * ksub();
        std::uint16_t* q = inv.data() + static_cast<std::size_t>(sq) * ksub();
        for (std::uint32_t j = 0; j < ksub(); ++j) {
            require(p[j] < ksub(), errc::invalid_argument, "assignment value out of range");
            require(q[p[j]] == 0xffff, errc::invalid_argument,
                    "assignment for sub-quantizer " + std::to_string(sq) + " is not a bijection");
            q[p[j]] = static_cast<std::uint16_t>(j);
        }
    }
    perms = new_perms;
    inv_perms = std::move(inv);
}

void ProductQuantizer::encode(const float* x, std::uint8_t* code) const {
    const std::size_t ds = dsub();
    std::memset(code, 0, code_bytes());
    for (std::uint32_t sq = 0; sq < m; ++sq) {
        const float* sub = x + sq * ds;
        std::uint32_t best = 0;
        float best_d = sq_l2(sub, centroid(sq, 0), ds);
        for (std::uint32_t j = 1; j < ksub(); ++j) {
            const float d = sq_l2(sub, centroid(sq, j), ds);
            if (d < best_d) {  // ties keep the lowest index
                best_d = d;
                best = j;
            }
        }
        code_set_field(code, sq, dbits, perm(sq)[best]);
    }
}

void ProductQuantizer::encode_batch(const VectorSet& x, std::uint8_t* codes, unsigned threads) const {
    require(x.dim == dim, errc::invalid_argument, "encode dimension mismatch");
    const std::size_t n = x.size();
    if (n == 0) return;
    const std::size_t ds = dsub();
    const std::size_t cb = code_bytes();
    if (threads == 0) threads = default_threads();
    std::memset(codes, 0, n * cb);

    // GEMM-backed per-sub-space assignment over row blocks.
    constexpr std::size_t kBlock = 65536;
    parallel_chunks((n + kBlock - 1) / kBlock, threads, [&](std::size_t cb_begin, std::size_t cb_end) {
        std::vector<float> sub;
        std::vector<std::uint32_t> assign;
        for (std::size_t blk = cb_begin; blk < cb_end; ++blk) {
            const std::size_t begin = blk * kBlock;
            const std::size_t bn = std::min(kBlock, n - begin);
            sub.resize(bn * ds);
            assign.resize(bn);
            for (std::uint32_t sq = 0; sq < m; ++sq) {
                for (std::size_t i = 0; i < bn; ++i) {
                    std::memcpy(sub.data() + i * ds, x.row(begin + i) + sq * ds, ds * sizeof(float));
                }
                assign_nearest(sub.data(), bn, centroid(sq, 0), ksub(), ds, assign.data());
                const std::uint16_t* p = perm(sq);
                for (std::size_t i = 0; i < bn; ++i) {
                    code_set_field(codes + (begin + i) * cb, sq, dbits, p[assign[i]]);
                }
            }
        }
    });
}

std::vector<float> ProductQuantizer::decode(const std::uint8_t* code) const {
    std::vector<float> out(dim);
    const std::size_t ds = dsub();
    for (std::uint32_t sq = 0; sq < m; ++sq) {
        const std::uint32_t field = code_get_field(code, sq, dbits);
        const std::uint32_t j = inv_perm(sq)[field];
        std::memcpy(out.data() + sq * ds, centroid(sq, j), ds * sizeof(float));
    }
    return out;
}

LookupTable ProductQuantizer::compute_lut(const float* query) const {
    LookupTable lut;
    lut.m = m;
    lut.ksub = ksub();
    lut.v.resize(static_cast<std::size_t>(m) * ksub());
    const std::size_t ds = dsub();
    for (std::uint32_t sq = 0; sq < m; ++sq) {
        const float* sub = query + sq * ds;
        float* row = lut.row(sq);
        for (std::uint32_t j = 0; j < ksub(); ++j) {
            row[j] = sq_l2(sub, centroid(sq, j), ds);
        }
    }
    return lut;
}

LookupTable ProductQuantizer::permuted_lut(const LookupTable& lut) const {
    LookupTable out;
    out.m = lut.m;
    out.ksub = lut.ksub;
    out.v.resize(lut.v.size());
    for (std::uint32_t sq = 0; sq < m; ++sq) {
        const float* src = lut.row(sq);
        float* dst = out.row(sq);
        const std::uint16_t* inv = inv_perm(sq);
        for (std::uint32_t f = 0; f < ksub(); ++f) dst[f] = src[inv[f]];
    }
    return out;
}

float ProductQuantizer::adc_distance(const LookupTable& lut, const std::uint8_t* code) const {
    float acc = 0.0f;
    for (std::uint32_t sq = 0; sq < m; ++sq) {
        const std::uint32_t field = code_get_field(code, sq, dbits);
        acc += lut.row(sq)[inv_perm(sq)[field]];
    }
    return acc;
}

void ProductQuantizer::validate() const {
    require(m > 0, errc::invalid_argument, "product quantizer with m=0");
    require(dbits >= 1 && dbits <= 8, errc::invalid_argument, "dbits must be in 1..8");
    require(dim % m == 0, errc::invalid_argument,
            "dimension " + std::to_string(dim) + " not divisible by m=" + std::to_string(m));
    require(codebooks.size() == static_cast<std::size_t>(m) * ksub() * dsub(), errc::invalid_argument,
            "codebook size mismatch");
    for (float v : codebooks) require(std::isfinite(v), errc::invalid_argument, "non-finite codebook entry");
    // perm bijectivity is enforced by set_assignments; re-check cheaply here
    std::vector<bool> seen(ksub());
    for (std::uint32_t sq = 0; sq < m; ++sq) {
        std::fill(seen.begin(), seen.end(), false);
        for (std::uint32_t j = 0; j < ksub(); ++j) {
            const std::uint16_t v = perm(sq)[j];
            require(v < ksub() && !seen[v], errc::invalid_argument, "assignment is not a bijection");
            seen[v] = true;
            require(inv_perm(sq)[v] == j, errc::invalid_argument, "inverse assignment out of sync");
        }
    }
}

ProductQuantizer train_pq(const VectorSet& train, const PqTrainParams& params) {
    require(params.m > 0, errc::invalid_argument, "m must be positive");
    require(params.dbits >= 1 && params.dbits <= 8, errc::invalid_argument, "dbits must be in 1..8");
    require(train.dim > 0 && train.dim % params.m == 0, errc::invalid_argument,
            "dimension " + std::to_string(train.dim) + " not divisible by m=" + std::to_string(params.m));
    require(train.size() > 0, errc::invalid_argument, "empty training set");

    ProductQuantizer pq;
    pq.m = params.m;
    pq.dbits = params.dbits;
    pq.dim = train.dim;
    const std::uint32_t ksub = pq.ksub();
    const std::size_t ds = pq.dsub();
    pq.codebooks.resize(static_cast<std::size_t>(params.m) * ksub * ds);

    const std::size_t n = train.size();
    unsigned threads = params.threads == 0 ? default_threads() : params.threads;
    // Sub-spaces are independent problems; seed each one separately so the
    // result does not depend on scheduling.
    parallel_chunks(params.m, threads, [&](std::size_t sq_begin, std::size_t sq_end) {
        std::vector<float> sub(n * ds);
        for (std::size_t sq = sq_begin; sq < sq_end; ++sq) {
            for (std::size_t i = 0; i < n; ++i) {
                std::memcpy(sub.data() + i * ds, train.row(i) + sq * ds, ds * sizeof(float));
            }
            KmeansParams kp;
            kp.k = ksub;
            kp.iters = params.kmeans_iters;
            kp.seed = params.seed + sq;
            KmeansResult r = kmeans(sub.data(), n, ds, kp);
            std::memcpy(pq.codebooks.data() + sq * static_cast<std::size_t>(ksub) * ds,
                        r.centroids.data(), static_cast<std::size_t>(ksub) * ds * sizeof(float));
        }
    });

    std::vector<std::uint16_t> identity(static_cast<std::size_t>(params.m) * ksub);
    for (std::uint32_t sq = 0; sq < params.m; ++sq) {
        for (std::uint32_t j = 0; j < ksub; ++j) {
            identity[static_cast<std::size_t>(sq) * ksub + j] = static_cast<std::uint16_t>(j);
        }
    }
    pq.set_assignments(identity);
    return pq;
}

}  // namespace poly
