#include "poly/polyopt.hpp"

#include <algorithm>
#include <cstring>

#include "poly/distances.hpp"

namespace poly {

namespace {

void check_bijection(const std::vector<std::uint16_t>& pi, std::uint32_t k) {
    require(pi.size() == k, errc::invalid_argument, "permutation has wrong length");
    std::vector<bool> seen(k, false);
    for (std::uint16_t v : pi) {
        require(v < k && !seen[v], errc::invalid_argument, "permutation is not a bijection");
        seen[v] = true;
    }
}

}  // namespace

CentroidDistanceMatrix CentroidDistanceMatrix::from_codebook(const float* centroids, std::uint32_t k,
                                                             std::size_t dsub) {
    CentroidDistanceMatrix c;
    c.k = k;
    c.d.resize(static_cast<std::size_t>(k) * k);
    pairwise_sq_l2(centroids, k, centroids, k, dsub, c.d.data());
    for (auto& v : c.d) v = std::sqrt(std::max(0.0f, v));
    for (std::uint32_t i = 0; i < k; ++i) c.d[static_cast<std::size_t>(i) * k + i] = 0.0f;
    // enforce exact symmetry against GEMM rounding
    for (std::uint32_t i = 0; i < k; ++i) {
        for (std::uint32_t j = i + 1; j < k; ++j) {
            const float v = c.d[static_cast<std::size_t>(i) * k + j];
            c.d[static_cast<std::size_t>(j) * k + i] = v;
        }
    }
    return c;
}

void CentroidDistanceMatrix::validate() const {
    require(k > 0 && d.size() == static_cast<std::size_t>(k) * k, errc::invalid_argument,
            "distance matrix size mismatch");
    for (std::uint32_t i = 0; i < k; ++i) {
        require(at(i, i) == 0.0f, errc::invalid_argument, "distance matrix diagonal must be zero");
        for (std::uint32_t j = 0; j < k; ++j) {
            require(at(i, j) >= 0.0f, errc::invalid_argument, "negative centroid distance");
            require(at(i, j) == at(j, i), errc::invalid_argument, "distance matrix must be symmetric");
        }
    }
}

DistanceLossSpec DistanceLossSpec::fit(const CentroidDistanceMatrix& c, std::uint32_t dbits, double alpha) {
    require(alpha > 0.0 && alpha < 1.0, errc::invalid_argument, "alpha must be in (0,1)");
    require(c.k >= 2, errc::invalid_argument, "need at least two centroids");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::uint32_t i = 0; i < c.k; ++i) {
        for (std::uint32_t j = 0; j < c.k; ++j) {
            if (i == j) continue;
            sum += c.at(i, j);
            ++count;
        }
    }
    const double mu = sum / static_cast<double>(count);
    double var = 0.0;
    for (std::uint32_t i = 0; i < c.k; ++i) {
        for (std::uint32_t j = 0; j < c.k; ++j) {
            if (i == j) continue;
            const double dd = c.at(i, j) - mu;
            var += dd * dd;
        }
    }
    const double sigma = std::sqrt(var / static_cast<double>(count));
    require(sigma > 0.0, errc::invalid_argument,
            "degenerate codebook: all centroid distances equal, cannot scale the loss");
    DistanceLossSpec spec;
    spec.dbits = dbits;
    spec.alpha = alpha;
    spec.mu = mu;
    spec.sigma = sigma;
    return spec;
}

DistanceLoss::DistanceLoss(const CentroidDistanceMatrix& c, const DistanceLossSpec& spec) : k_(c.k) {
    require(spec.sigma > 0.0, errc::invalid_argument, "sigma must be positive");
    require(spec.alpha > 0.0 && spec.alpha < 1.0, errc::invalid_argument, "alpha must be in (0,1)");
    const std::size_t kk = static_cast<std::size_t>(k_) * k_;
    target_.resize(kk);
    weight_.resize(kk);
    const double log_alpha = std::log(spec.alpha);
    for (std::size_t idx = 0; idx < kk; ++idx) {
        const double t = spec.f(c.d[idx]);
        target_[idx] = t;
        weight_[idx] = std::exp(t * log_alpha);
    }
}

double DistanceLoss::loss(const std::uint16_t* pi) const {
    double acc = 0.0;
    for (std::uint32_t i = 0; i < k_; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * k_;
        const std::uint32_t ci = pi[i];
        for (std::uint32_t j = 0; j < k_; ++j) {
            const double e = static_cast<double>(hamming_word(ci, pi[j])) - target_[row + j];
            acc += weight_[row + j] * e * e;
        }
    }
    return acc;
}

double DistanceLoss::delta(const std::uint16_t* pi, std::uint32_t a, std::uint32_t b) const {
    require(a != b, errc::invalid_argument, "swap endpoints must differ");
    const std::uint32_t ca = pi[a];
    const std::uint32_t cb = pi[b];
    const std::size_t row_a = static_cast<std::size_t>(a) * k_;
    const std::size_t row_b = static_cast<std::size_t>(b) * k_;
    double acc = 0.0;
    for (std::uint32_t kk = 0; kk < k_; ++kk) {
        if (kk == a || kk == b) continue;  // pair (a,b) keeps its Hamming value
        const std::uint32_t ck = pi[kk];
        const double h_ak = hamming_word(ca, ck);
        const double h_bk = hamming_word(cb, ck);
        const double ta = target_[row_a + kk];
        const double tb = target_[row_b + kk];
        acc += weight_[row_a + kk] * ((h_bk - ta) * (h_bk - ta) - (h_ak - ta) * (h_ak - ta));
        acc += weight_[row_b + kk] * ((h_ak - tb) * (h_ak - tb) - (h_bk - tb) * (h_bk - tb));
    }
    return 2.0 * acc;  // symmetric counterparts (k,a), (k,b)
}

RankLoss::RankLoss(const CentroidDistanceMatrix& c) : k_(c.k), dist_(c.d) {
    const std::size_t kk = static_cast<std::size_t>(k_) * k_;
    ell_.resize(k_ + 1);
    ell_[0] = 0.0;
    for (std::uint32_t i = 1; i <= k_; ++i) ell_[i] = ell_[i - 1] + 1.0 / static_cast<double>(i);

    // r(i,j): rank of j by distance from i, 1-based when distances are
    // distinct because k = i itself counts as strictly closer.
    weight_.assign(kk, 0.0);
    for (std::uint32_t i = 0; i < k_; ++i) {
        const float* drow = dist_.data() + static_cast<std::size_t>(i) * k_;
        for (std::uint32_t j = 0; j < k_; ++j) {
            if (i == j) continue;
            std::uint32_t rank = 0;
            for (std::uint32_t t = 0; t < k_; ++t) {
                if (drow[t] < drow[j]) ++rank;
            }
            weight_[static_cast<std::size_t>(i) * k_ + j] = 1.0 / static_cast<double>(std::max(rank, 1u));
        }
    }
}

double RankLoss::loss(const std::uint16_t* pi) const {
    double acc = 0.0;
    for (std::uint32_t i = 0; i < k_; ++i) {
        const float* drow = dist_.data() + static_cast<std::size_t>(i) * k_;
        const std::uint32_t ci = pi[i];
        for (std::uint32_t j = 0; j < k_; ++j) {
            if (i == j) continue;
            const std::uint32_t hij = hamming_word(ci, pi[j]);
            std::uint32_t viol = 0;
            for (std::uint32_t t = 0; t < k_; ++t) {
                if (drow[j] < drow[t] && hij > hamming_word(ci, pi[t])) ++viol;
            }
            acc += weight_[static_cast<std::size_t>(i) * k_ + j] * ell_[viol];
        }
    }
    return acc;
}

RankLossSession::RankLossSession(const RankLoss& loss, const std::uint16_t* pi)
    : loss_(loss), k_(loss.k()) {
    pi_.resize(k_);
    if (pi) {
        std::copy(pi, pi + k_, pi_.begin());
        check_bijection(pi_, k_);
    } else {
        for (std::uint32_t i = 0; i < k_; ++i) pi_[i] = static_cast<std::uint16_t>(i);
    }
    rebuild();
}

void RankLossSession::rebuild() {
    const std::size_t kk = static_cast<std::size_t>(k_) * k_;
    hmat_.resize(kk);
    rmat_.assign(kk, 0);
    row_loss_.assign(k_, 0.0);
    for (std::uint32_t i = 0; i < k_; ++i) {
        for (std::uint32_t j = 0; j < k_; ++j) {
            hmat_[static_cast<std::size_t>(i) * k_ + j] =
                static_cast<std::uint8_t>(hamming_word(pi_[i], pi_[j]));
        }
    }
    total_ = 0.0;
    for (std::uint32_t i = 0; i < k_; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * k_;
        double li = 0.0;
        for (std::uint32_t j = 0; j < k_; ++j) {
            if (i == j) continue;
            std::uint32_t viol = 0;
            for (std::uint32_t t = 0; t < k_; ++t) {
                if (loss_.dist(i, j) < loss_.dist(i, t) && hmat_[row + j] > hmat_[row + t]) ++viol;
            }
            rmat_[row + j] = static_cast<std::uint16_t>(viol);
            li += loss_.pair_weight(i, j) * loss_.ell(viol);
        }
        row_loss_[i] = li;
        total_ += li;
    }
}

// Row loss of query row i under the permutation with images of a and b
// exchanged. Optionally captures the new violation counts of the row.
double RankLossSession::swapped_row_loss(std::uint32_t i, std::uint32_t a, std::uint32_t b,
                                         std::uint16_t* row_r) const {
    const std::uint32_t code_i = i == a ? pi_[b] : (i == b ? pi_[a] : pi_[i]);
    // hypothetical Hamming row of i
    std::vector<std::uint8_t> h(k_);
    for (std::uint32_t j = 0; j < k_; ++j) {
        const std::uint32_t code_j = j == a ? pi_[b] : (j == b ? pi_[a] : pi_[j]);
        h[j] = static_cast<std::uint8_t>(hamming_word(code_i, code_j));
    }
    double li = 0.0;
    for (std::uint32_t j = 0; j < k_; ++j) {
        if (i == j) continue;
        std::uint32_t viol = 0;
        for (std::uint32_t t = 0; t < k_; ++t) {
            if (loss_.dist(i, j) < loss_.dist(i, t) && h[j] > h[t]) ++viol;
        }
        if (row_r) row_r[j] = static_cast<std::uint16_t>(viol);
        li += loss_.pair_weight(i, j) * loss_.ell(viol);
    }
    return li;
}

double RankLossSession::delta(std::uint32_t a, std::uint32_t b) {
    require(a != b, errc::invalid_argument, "swap endpoints must differ");
    double acc = 0.0;
    acc += swapped_row_loss(a, a, b) - row_loss_[a];
    acc += swapped_row_loss(b, a, b) - row_loss_[b];
    for (std::uint32_t i = 0; i < k_; ++i) {
        if (i == a || i == b) continue;
        const std::size_t row = static_cast<std::size_t>(i) * k_;
        const std::uint8_t ha = hmat_[row + a];
        const std::uint8_t hb = hmat_[row + b];
        if (ha == hb) continue;  // swap is invisible from this row
        // columns a and b: codes exchanged, recount violations
        for (const std::uint32_t j : {a, b}) {
            const std::uint8_t h_new = j == a ? hb : ha;
            std::uint32_t viol = 0;
            for (std::uint32_t t = 0; t < k_; ++t) {
                const std::uint8_t ht = t == a ? hb : (t == b ? ha : hmat_[row + t]);
                if (loss_.dist(i, j) < loss_.dist(i, t) && h_new > ht) ++viol;
            }
            acc += loss_.pair_weight(i, j) * (loss_.ell(viol) - loss_.ell(rmat_[row + j]));
        }
        // remaining columns: only the k = a and k = b witnesses change
        for (std::uint32_t j = 0; j < k_; ++j) {
            if (j == i || j == a || j == b) continue;
            const int dfar = static_cast<int>(loss_.dist(i, j) < loss_.dist(i, a)) -
                             static_cast<int>(loss_.dist(i, j) < loss_.dist(i, b));
            if (dfar == 0) continue;
            const std::uint8_t hij = hmat_[row + j];
            const int dviol = static_cast<int>(hij > hb) - static_cast<int>(hij > ha);
            if (dviol == 0) continue;
            const int dr = dfar * dviol;
            acc += loss_.pair_weight(i, j) *
                   (loss_.ell(static_cast<std::size_t>(rmat_[row + j] + dr)) - loss_.ell(rmat_[row + j]));
        }
    }
    return acc;
}

void RankLossSession::apply(std::uint32_t a, std::uint32_t b) {
    require(a != b, errc::invalid_argument, "swap endpoints must differ");
    // compute new rows a, b before touching any state
    std::vector<std::uint16_t> new_ra(k_), new_rb(k_);
    const double new_la = swapped_row_loss(a, a, b, new_ra.data());
    const double new_lb = swapped_row_loss(b, a, b, new_rb.data());

    for (std::uint32_t i = 0; i < k_; ++i) {
        if (i == a || i == b) continue;
        const std::size_t row = static_cast<std::size_t>(i) * k_;
        const std::uint8_t ha = hmat_[row + a];
        const std::uint8_t hb = hmat_[row + b];
        if (ha == hb) continue;
        double dli = 0.0;
        for (const std::uint32_t j : {a, b}) {
            const std::uint8_t h_new = j == a ? hb : ha;
            std::uint32_t viol = 0;
            for (std::uint32_t t = 0; t < k_; ++t) {
                const std::uint8_t ht = t == a ? hb : (t == b ? ha : hmat_[row + t]);
                if (loss_.dist(i, j) < loss_.dist(i, t) && h_new > ht) ++viol;
            }
            dli += loss_.pair_weight(i, j) * (loss_.ell(viol) - loss_.ell(rmat_[row + j]));
            rmat_[row + j] = static_cast<std::uint16_t>(viol);
        }
        for (std::uint32_t j = 0; j < k_; ++j) {
            if (j == i || j == a || j == b) continue;
            const int dfar = static_cast<int>(loss_.dist(i, j) < loss_.dist(i, a)) -
                             static_cast<int>(loss_.dist(i, j) < loss_.dist(i, b));
            if (dfar == 0) continue;
            const std::uint8_t hij = hmat_[row + j];
            const int dviol = static_cast<int>(hij > hb) - static_cast<int>(hij > ha);
            if (dviol == 0) continue;
            const int dr = dfar * dviol;
            dli += loss_.pair_weight(i, j) *
                   (loss_.ell(static_cast<std::size_t>(rmat_[row + j] + dr)) - loss_.ell(rmat_[row + j]));
            rmat_[row + j] = static_cast<std::uint16_t>(rmat_[row + j] + dr);
        }
        row_loss_[i] += dli;
        total_ += dli;
        std::swap(hmat_[row + a], hmat_[row + b]);
    }

    total_ += (new_la - row_loss_[a]) + (new_lb - row_loss_[b]);
    row_loss_[a] = new_la;
    row_loss_[b] = new_lb;
    std::copy(new_ra.begin(), new_ra.end(), rmat_.begin() + static_cast<std::size_t>(a) * k_);
    std::copy(new_rb.begin(), new_rb.end(), rmat_.begin() + static_cast<std::size_t>(b) * k_);
    std::swap(pi_[a], pi_[b]);
    for (std::uint32_t j = 0; j < k_; ++j) {
        hmat_[static_cast<std::size_t>(a) * k_ + j] =
            static_cast<std::uint8_t>(hamming_word(pi_[a], pi_[j]));
        hmat_[static_cast<std::size_t>(b) * k_ + j] =
            static_cast<std::uint8_t>(hamming_word(pi_[b], pi_[j]));
    }
}

DistanceLossSession::DistanceLossSession(const DistanceLoss& loss) : loss_(loss) {
    pi_.resize(loss.k());
    for (std::uint32_t i = 0; i < loss.k(); ++i) pi_[i] = static_cast<std::uint16_t>(i);
}

LossKind loss_kind_from_string(const std::string& name) {
    if (name == "distance") return LossKind::distance;
    if (name == "rank") return LossKind::rank;
    fail(errc::invalid_argument, "unknown loss '" + name + "' (expected distance or rank)");
}

const char* to_string(LossKind kind) {
    return kind == LossKind::distance ? "distance" : "rank";
}

double distance_loss(const std::vector<std::uint16_t>& pi, const CentroidDistanceMatrix& c,
                     const DistanceLossSpec& spec) {
    check_bijection(pi, c.k);
    return DistanceLoss(c, spec).loss(pi.data());
}

double distance_loss_delta(const std::vector<std::uint16_t>& pi, std::uint32_t a, std::uint32_t b,
                           const CentroidDistanceMatrix& c, const DistanceLossSpec& spec) {
    check_bijection(pi, c.k);
    return DistanceLoss(c, spec).delta(pi.data(), a, b);
}

double rank_loss(const std::vector<std::uint16_t>& pi, const CentroidDistanceMatrix& c) {
    check_bijection(pi, c.k);
    return RankLoss(c).loss(pi.data());
}

double rank_loss_delta(const std::vector<std::uint16_t>& pi, std::uint32_t a, std::uint32_t b,
                       const CentroidDistanceMatrix& c) {
    check_bijection(pi, c.k);
    RankLoss loss(c);
    RankLossSession session(loss, pi.data());
    return session.delta(a, b);
}

AnnealResult anneal(const CentroidDistanceMatrix& c, const DistanceLossSpec& spec,
                    const AnnealSchedule& schedule, const AnnealObserver* observer) {
    c.validate();
    const DistanceLoss loss(c, spec);
    DistanceLossSession session(loss);
    return anneal_session(session, schedule, observer);
}

AnnealResult anneal_rank(const CentroidDistanceMatrix& c, const AnnealSchedule& schedule,
                         const AnnealObserver* observer) {
    c.validate();
    const RankLoss loss(c);
    RankLossSession session(loss);
    return anneal_session(session, schedule, observer);
}

ProductQuantizer optimize_pq(const ProductQuantizer& pq, const OptimizeParams& params) {
    pq.validate();
    ProductQuantizer out = pq;
    std::vector<std::uint16_t> perms(static_cast<std::size_t>(pq.m) * pq.ksub());
    unsigned threads = params.threads == 0 ? default_threads() : params.threads;
    parallel_chunks(pq.m, threads, [&](std::size_t sq_begin, std::size_t sq_end) {
        for (std::size_t sq = sq_begin; sq < sq_end; ++sq) {
            const CentroidDistanceMatrix c = CentroidDistanceMatrix::from_codebook(
                pq.centroid(static_cast<std::uint32_t>(sq), 0), pq.ksub(), pq.dsub());
            AnnealSchedule sched = params.schedule;
            sched.seed = params.schedule.seed + sq;
            AnnealResult r;
            if (params.loss == LossKind::distance) {
                const DistanceLossSpec spec = DistanceLossSpec::fit(c, pq.dbits, params.alpha);
                const DistanceLoss loss(c, spec);
                DistanceLossSession session(loss);
                r = anneal_session(session, sched);
            } else {
                const RankLoss loss(c);
                RankLossSession session(loss);
                r = anneal_session(session, sched);
            }
            std::copy(r.perm.begin(), r.perm.end(),
                      perms.begin() + sq * static_cast<std::size_t>(pq.ksub()));
        }
    });
    out.set_assignments(perms);
    return out;
}

std::vector<double> assignment_losses(const ProductQuantizer& pq, LossKind kind, double alpha) {
    std::vector<double> out(pq.m);
    for (std::uint32_t sq = 0; sq < pq.m; ++sq) {
        const CentroidDistanceMatrix c =
            CentroidDistanceMatrix::from_codebook(pq.centroid(sq, 0), pq.ksub(), pq.dsub());
        std::vector<std::uint16_t> pi(pq.perm(sq), pq.perm(sq) + pq.ksub());
        if (kind == LossKind::distance) {
            const DistanceLossSpec spec = DistanceLossSpec::fit(c, pq.dbits, alpha);
            out[sq] = distance_loss(pi, c, spec);
        } else {
            out[sq] = rank_loss(pi, c);
        }
    }
    return out;
}

}  // namespace poly
