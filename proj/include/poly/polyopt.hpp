#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "poly/common.hpp"
#include "poly/pq.hpp"

namespace poly {

/// Bit count of the XOR of two code words.
inline std::uint32_t hamming_word(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>(__builtin_popcount(a ^ b));
}

/// K x K Euclidean distances between the centroids of one sub-quantizer.
struct CentroidDistanceMatrix {
    std::uint32_t k = 0;
    std::vector<float> d;  // k * k, symmetric, zero diagonal

    float at(std::uint32_t i, std::uint32_t j) const { return d[static_cast<std::size_t>(i) * k + j]; }

    static CentroidDistanceMatrix from_codebook(const float* centroids, std::uint32_t k, std::size_t dsub);
    void validate() const;
};

/// Linear map f bringing centroid distances onto the Hamming scale, plus the
/// exponential down-weighting of large distances: w(u) = alpha^u.
struct DistanceLossSpec {
    std::uint32_t dbits = 8;
    double alpha = 0.5;  // weight base, in (0,1)
    double mu = 0.0;     // empirical mean of off-diagonal distances
    double sigma = 1.0;  // empirical standard deviation, > 0

    double f(double x) const {
        return std::sqrt(static_cast<double>(dbits)) / (2.0 * sigma) * (x - mu) +
               static_cast<double>(dbits) / 2.0;
    }

    /// Fits mu and sigma over the K(K-1) off-diagonal entries.
    static DistanceLossSpec fit(const CentroidDistanceMatrix& c, std::uint32_t dbits, double alpha = 0.5);
};

/// Weighted distance-estimator loss
///   L(pi) = sum_{i,j} w(f(d_ij)) (h(pi(i), pi(j)) - f(d_ij))^2
/// over all ordered pairs including i = j (a pi-independent constant).
class DistanceLoss {
public:
    DistanceLoss(const CentroidDistanceMatrix& c, const DistanceLossSpec& spec);

    std::uint32_t k() const { return k_; }
    double loss(const std::uint16_t* pi) const;                               // O(K^2)
    double delta(const std::uint16_t* pi, std::uint32_t a, std::uint32_t b) const;  // O(K)

private:
    std::uint32_t k_;
    std::vector<double> target_;  // f(d_ij)
    std::vector<double> weight_;  // alpha^f(d_ij)
};

/// Weighted pairwise ranking loss
///   L(pi) = sum_{i != j} alpha_{r(i,j)} ell_{r_pi(i,j)}
/// with alpha_i = 1/i, ell_j the harmonic partial sums (ell_0 = 0),
/// r(i,j) the rank of j by centroid distance from i (1 = nearest), and
/// r_pi(i,j) the number of order violations
///   r_pi(i,j) = #{k : d(c_i,c_j) < d(c_i,c_k) and h(pi(i),pi(j)) > h(pi(i),pi(k))}.
/// Ties in either ordering contribute nothing.
class RankLoss {
public:
    explicit RankLoss(const CentroidDistanceMatrix& c);

    std::uint32_t k() const { return k_; }
    double loss(const std::uint16_t* pi) const;  // O(K^3) reference evaluation
    double pair_weight(std::uint32_t i, std::uint32_t j) const {
        return weight_[static_cast<std::size_t>(i) * k_ + j];
    }
    double ell(std::size_t r) const { return ell_[r]; }
    float dist(std::uint32_t i, std::uint32_t j) const {
        return dist_[static_cast<std::size_t>(i) * k_ + j];
    }

private:
    std::uint32_t k_;
    std::vector<float> dist_;     // centroid distances
    std::vector<double> weight_;  // alpha_{r(i,j)}, 0 on the diagonal
    std::vector<double> ell_;     // ell_0 .. ell_k
};

/// Incremental evaluation state for swap moves on the distance loss.
class DistanceLossSession {
public:
    explicit DistanceLossSession(const DistanceLoss& loss);

    std::uint32_t k() const { return loss_.k(); }
    const std::uint16_t* perm() const { return pi_.data(); }
    double full_loss() const { return loss_.loss(pi_.data()); }
    double delta(std::uint32_t a, std::uint32_t b) const { return loss_.delta(pi_.data(), a, b); }
    void apply(std::uint32_t a, std::uint32_t b) { std::swap(pi_[a], pi_[b]); }

private:
    const DistanceLoss& loss_;
    std::vector<std::uint16_t> pi_;
};

/// Incremental evaluation state for swap moves on the ranking loss. Keeps the
/// Hamming matrix, the violation counts r_pi and per-row sums so a swap costs
/// O(K^2) instead of O(K^3).
class RankLossSession {
public:
    RankLossSession(const RankLoss& loss, const std::uint16_t* pi = nullptr);

    std::uint32_t k() const { return k_; }
    const std::uint16_t* perm() const { return pi_.data(); }
    double full_loss() const { return total_; }
    double delta(std::uint32_t a, std::uint32_t b);
    void apply(std::uint32_t a, std::uint32_t b);

private:
    void rebuild();
    double swapped_row_loss(std::uint32_t i, std::uint32_t a, std::uint32_t b,
                            std::uint16_t* row_r = nullptr) const;

    const RankLoss& loss_;
    std::uint32_t k_;
    std::vector<std::uint16_t> pi_;
    std::vector<std::uint8_t> hmat_;   // h(pi(i), pi(j))
    std::vector<std::uint16_t> rmat_;  // r_pi(i,j)
    std::vector<double> row_loss_;
    double total_ = 0.0;
};

/// Annealing schedule; t decays every iteration so the temperature drops by
/// a factor 0.9 every 500 iterations under the default decay.
struct AnnealSchedule {
    std::uint64_t n_iter = 500000;
    double t0 = 0.7;
    double t_decay = std::pow(0.9, 1.0 / 500.0);
    std::uint64_t seed = 1234567;
    bool metropolis = false;  // off: worse moves accepted with probability t
};

struct AnnealResult {
    std::vector<std::uint16_t> perm;  // best-loss assignment ever visited
    double best_loss = 0.0;
    double initial_loss = 0.0;
    std::uint64_t accepted = 0;
};

/// Called after every accepted move with (iteration, current loss).
using AnnealObserver = std::function<void(std::uint64_t, double)>;

template <class Session>
AnnealResult anneal_session(Session& session, const AnnealSchedule& schedule,
                            const AnnealObserver* observer = nullptr) {
    const std::uint32_t k = session.k();
    AnnealResult res;
    res.perm.assign(session.perm(), session.perm() + k);
    res.initial_loss = session.full_loss();
    res.best_loss = res.initial_loss;
    if (k < 2 || schedule.n_iter == 0) return res;

    require(schedule.t_decay > 0.0 && schedule.t_decay < 1.0, errc::invalid_argument,
            "t_decay must be in (0,1)");
    require(schedule.t0 > 0.0 && schedule.t0 <= 1.0, errc::invalid_argument, "t0 must be in (0,1]");

    Rng rng(schedule.seed);
    double t = schedule.t0;
    double cur = res.initial_loss;
    for (std::uint64_t iter = 0; iter < schedule.n_iter; ++iter) {
        const std::uint32_t a = static_cast<std::uint32_t>(rng.below(k));
        std::uint32_t b = static_cast<std::uint32_t>(rng.below(k - 1));
        if (b >= a) ++b;
        const double dc = session.delta(a, b);
        bool accept = dc < 0.0;
        if (!accept) {
            if (schedule.metropolis) {
                accept = rng.u01() < std::exp(-dc / std::max(t, 1e-300));
            } else {
                accept = rng.u01() < t;
            }
        }
        if (accept) {
            session.apply(a, b);
            cur += dc;
            ++res.accepted;
            if (observer) (*observer)(iter, cur);
            if (cur < res.best_loss) {
                res.best_loss = cur;
                res.perm.assign(session.perm(), session.perm() + k);
            }
        }
        t *= schedule.t_decay;
    }
    return res;
}

enum class LossKind { distance, rank };
LossKind loss_kind_from_string(const std::string& name);
const char* to_string(LossKind kind);

// Standalone forms of the objectives, convenient for validation; the annealer
// uses the session classes above.
double distance_loss(const std::vector<std::uint16_t>& pi, const CentroidDistanceMatrix& c,
                     const DistanceLossSpec& spec);
double distance_loss_delta(const std::vector<std::uint16_t>& pi, std::uint32_t a, std::uint32_t b,
                           const CentroidDistanceMatrix& c, const DistanceLossSpec& spec);
double rank_loss(const std::vector<std::uint16_t>& pi, const CentroidDistanceMatrix& c);
double rank_loss_delta(const std::vector<std::uint16_t>& pi, std::uint32_t a, std::uint32_t b,
                       const CentroidDistanceMatrix& c);

/// Anneals one permutation for the given sub-problem.
AnnealResult anneal(const CentroidDistanceMatrix& c, const DistanceLossSpec& spec,
                    const AnnealSchedule& schedule, const AnnealObserver* observer = nullptr);
AnnealResult anneal_rank(const CentroidDistanceMatrix& c, const AnnealSchedule& schedule,
                         const AnnealObserver* observer = nullptr);

struct OptimizeParams {
    LossKind loss = LossKind::distance;
    double alpha = 0.5;
    AnnealSchedule schedule;
    unsigned threads = 0;
};

/// Replaces every sub-quantizer's index assignment with the annealed one.
/// Codebooks are untouched; sub-problems run concurrently with seeds derived
/// from schedule.seed, so results do not depend on scheduling.
ProductQuantizer optimize_pq(const ProductQuantizer& pq, const OptimizeParams& params);

/// Per-sub-quantizer losses of the current assignments, for reporting.
std::vector<double> assignment_losses(const ProductQuantizer& pq, LossKind kind, double alpha = 0.5);

}  // namespace poly
