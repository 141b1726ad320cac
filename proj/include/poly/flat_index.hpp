#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <vector>

#include "poly/pq.hpp"
#include "poly/vectors.hpp"

namespace poly {

/// Bit-level Hamming distance between two packed codes.
inline std::uint32_t hamming_bytes(const std::uint8_t* a, const std::uint8_t* b, std::size_t nbytes) {
    std::uint32_t acc = 0;
    std::size_t i = 0;
    for (; i + 8 <= nbytes; i += 8) {
        std::uint64_t wa, wb;
        std::memcpy(&wa, a + i, 8);
        std::memcpy(&wb, b + i, 8);
        acc += static_cast<std::uint32_t>(__builtin_popcountll(wa ^ wb));
    }
    for (; i < nbytes; ++i) {
        acc += static_cast<std::uint32_t>(__builtin_popcount(static_cast<unsigned>(a[i] ^ b[i])));
    }
    return acc;
}

/// Number of sub-quantizer fields on which two codes disagree.
inline std::uint32_t disidx_fields(const std::uint8_t* a, const std::uint8_t* b, std::uint32_t m,
                                   std::uint32_t dbits) {
    std::uint32_t acc = 0;
    for (std::uint32_t sq = 0; sq < m; ++sq) {
        acc += code_get_field(a, sq, dbits) != code_get_field(b, sq, dbits);
    }
    return acc;
}

struct Neighbor {
    std::int64_t id;
    float score;
};

enum class Strategy { adc, binary, disidx, dual };
Strategy strategy_from_string(const std::string& name);
const char* to_string(Strategy s);

struct SearchParams {
    Strategy strategy = Strategy::adc;
    std::uint32_t k = 10;
    std::uint32_t tau = 0;  // Hamming threshold for dual, in [0, code_bits]
};

struct SearchStats {
    std::uint64_t scanned = 0;    // codes visited
    std::uint64_t survivors = 0;  // codes passing the Hamming filter (dual only)
};

/// Bounded result accumulator ordered by (score, id) ascending.
class TopK {
public:
    explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k); }

    void offer(float score, std::int64_t id) {
        if (k_ == 0) return;
        if (heap_.size() < k_) {
            heap_.push_back({id, score});
            std::push_heap(heap_.begin(), heap_.end(), worse);
            return;
        }
        if (worse(heap_.front(), {id, score})) {
            std::pop_heap(heap_.begin(), heap_.end(), worse);
            heap_.back() = {id, score};
            std::push_heap(heap_.begin(), heap_.end(), worse);
        }
    }

    bool full() const { return heap_.size() == k_; }
    float worst_score() const { return heap_.front().score; }

    std::vector<Neighbor> sorted() && {
        std::sort(heap_.begin(), heap_.end(),
                  [](const Neighbor& a, const Neighbor& b) { return !worse(a, b) && worse(b, a); });
        return std::move(heap_);
    }

private:
    static bool worse(const Neighbor& a, const Neighbor& b) {
        return a.score > b.score || (a.score == b.score && a.id > b.id);
    }

    std::size_t k_;
    std::vector<Neighbor> heap_;
};

/// Exhaustive-scan index over packed polysemous codes. The same bytes serve
/// the asymmetric estimator (adc), plain Hamming comparison (binary), the
/// differing-field count (disidx) and the filter+rerank pipeline (dual).
class FlatIndex {
public:
    FlatIndex() = default;
    explicit FlatIndex(ProductQuantizer pq);

    const ProductQuantizer& pq() const { return pq_; }
    std::size_t size() const { return ids_.size(); }
    std::size_t code_bytes() const { return pq_.code_bytes(); }
    std::uint32_t code_bits() const { return static_cast<std::uint32_t>(pq_.code_bits()); }
    const std::uint8_t* code(std::size_t i) const { return codes_.data() + i * code_bytes(); }
    std::int64_t id(std::size_t i) const { return ids_[i]; }
    const std::vector<std::uint8_t>& codes() const { return codes_; }
    const std::vector<std::int64_t>& ids() const { return ids_; }

    std::optional<std::uint32_t> default_tau;  // set by calibrate, persisted

    /// Encodes and appends; ids come from the set (sequential by default).
    void add(const VectorSet& x, unsigned threads = 0);

    /// Appends pre-encoded codes (serialization path).
    void add_codes(const std::uint8_t* codes, const std::int64_t* ids, std::size_t n);

    std::vector<Neighbor> search(const float* query, const SearchParams& params,
                                 SearchStats* stats = nullptr) const;

    std::vector<std::vector<Neighbor>> search_batch(const VectorSet& queries, const SearchParams& params,
                                                    unsigned threads = 0,
                                                    SearchStats* total_stats = nullptr) const;

    /// Largest tau still filtering out at least the target fraction:
    /// max { tau : mean survivor fraction over train queries <= 1 - rate }.
    /// Returns 0 with *warning set when even tau = 0 keeps too many.
    std::uint32_t calibrate_threshold(const VectorSet& train_queries, double target_filter_rate,
                                      bool* warning = nullptr, unsigned threads = 0) const;

    /// Same codebooks and stored vectors under different index assignments;
    /// codes are relabeled field-by-field, exactly as if re-encoded.
    FlatIndex with_assignments(const std::vector<std::uint16_t>& perms) const;

private:
    ProductQuantizer pq_;
    std::vector<std::uint8_t> codes_;
    std::vector<std::int64_t> ids_;

    friend struct IndexContainerAccess;
};

}  // namespace poly
