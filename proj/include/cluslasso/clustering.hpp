#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cluslasso/linalg.hpp"

namespace cluslasso {

/// Disjoint covariate groups covering {0,...,p-1}, kept in canonical order:
/// groups sorted by smallest member, members ascending.
struct Partition {
    std::vector<GroupIndex> groups;

    int q() const { return static_cast<int>(groups.size()); }

    int p() const {
        int total = 0;
        for (const auto& g : groups) total += g.size();
        return total;
    }

    static Partition of(std::vector<std::vector<int>> raw, int p) {
        Partition out;
        out.groups.reserve(raw.size());
        for (auto& members : raw) out.groups.emplace_back(std::move(members));
        std::sort(out.groups.begin(), out.groups.end(),
                  [](const GroupIndex& a, const GroupIndex& b) {
                      return a.indices.front() < b.indices.front();
                  });
        out.validate(p);
        return out;
    }

    static Partition singletons(int p) {
        std::vector<std::vector<int>> raw(static_cast<std::size_t>(p));
        for (int j = 0; j < p; ++j) raw[static_cast<std::size_t>(j)] = {j};
        return of(std::move(raw), p);
    }

    static Partition single(int p) {
        std::vector<int> all(static_cast<std::size_t>(p));
        std::iota(all.begin(), all.end(), 0);
        return of({std::move(all)}, p);
    }

    void validate(int p) const {
        if (p < 1) throw std::invalid_argument("partition requires p >= 1");
        std::vector<char> seen(static_cast<std::size_t>(p), 0);
        for (const auto& g : groups) {
            g.validate(p);
            for (int j : g.indices) {
                if (seen[static_cast<std::size_t>(j)])
                    throw std::invalid_argument("partition groups overlap");
                seen[static_cast<std::size_t>(j)] = 1;
            }
        }
        for (char s : seen)
            if (!s) throw std::invalid_argument("partition does not cover all indices");
    }

    /// Index of the group containing covariate j, or -1.
    int group_of(int j) const {
        for (std::size_t r = 0; r < groups.size(); ++r) {
            const auto& idx = groups[r].indices;
            if (std::binary_search(idx.begin(), idx.end(), j)) return static_cast<int>(r);
        }
        return -1;
    }

    bool operator==(const Partition& other) const { return groups == other.groups; }
};

/// True iff every group of `fine` is contained in some group of `coarse`
/// (non-strict refinement).
inline bool finer_than(const Partition& fine, const Partition& coarse) {
    if (fine.p() != coarse.p()) throw std::invalid_argument("partitions cover different index sets");
    for (const auto& g : fine.groups) {
        const int host = coarse.group_of(g.indices.front());
        if (host < 0) return false;
        const auto& members = coarse.groups[static_cast<std::size_t>(host)].indices;
        for (int j : g.indices)
            if (!std::binary_search(members.begin(), members.end(), j)) return false;
    }
    return true;
}

/// One agglomerative merge: the pair is identified by each group's smallest
/// member. `value` is the maximal between-group canonical correlation after
/// the merge (canonical-correlation clustering) or the linkage height of the
/// merge (correlation clustering).
struct MergeStep {
    int iteration = 0;
    int group_a = 0;
    int group_b = 0;
    double value = 0.0;
};

struct MergeTrace {
    double initial_value = 0.0;  // value at iteration 0 (all singletons)
    std::vector<MergeStep> steps;
};

/// Partition reached after replaying the first `b` merges of a trace over p
/// singletons.
inline Partition partition_at(const MergeTrace& trace, int p, int b) {
    if (b < 0 || b > static_cast<int>(trace.steps.size()))
        throw std::invalid_argument("merge count out of range");
    std::vector<int> parent(static_cast<std::size_t>(p));
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&parent](int j) {
        while (parent[static_cast<std::size_t>(j)] != j) j = parent[static_cast<std::size_t>(j)];
        return j;
    };
    for (int i = 0; i < b; ++i) {
        const int ra = find(trace.steps[static_cast<std::size_t>(i)].group_a);
        const int rb = find(trace.steps[static_cast<std::size_t>(i)].group_b);
        parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
    }
    std::vector<std::vector<int>> raw(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) raw[static_cast<std::size_t>(find(j))].push_back(j);
    raw.erase(std::remove_if(raw.begin(), raw.end(),
                             [](const std::vector<int>& g) { return g.empty(); }),
              raw.end());
    return Partition::of(std::move(raw), p);
}

/// Maximal canonical correlation over all unordered group pairs; 0 for the
/// single-group partition by convention.
inline double rho_max(const DesignMatrix& x, const Partition& part,
                      double rank_tol = kDefaultRankTol) {
    part.validate(static_cast<int>(x.p()));
    if (part.q() <= 1) return 0.0;
    const Eigen::MatrixXd gram = (x.data.transpose() * x.data) / static_cast<double>(x.n());
    double best = 0.0;
    for (std::size_t r = 0; r + 1 < part.groups.size(); ++r)
        for (std::size_t l = r + 1; l < part.groups.size(); ++l) {
            const double v = detail::cancor_from_gram(gram, x.n(), part.groups[r].indices,
                                                      part.groups[l].indices, rank_tol)
                                 .value;
            best = std::max(best, v);
        }
    return best;
}

inline bool is_tau_separated(const DesignMatrix& x, const Partition& part, double tau,
                             double rank_tol = kDefaultRankTol) {
    return rho_max(x, part, rank_tol) <= tau;
}

struct ClusterResult {
    Partition partition;
    MergeTrace trace;
};

struct AutoClusterResult {
    Partition partition;
    MergeTrace trace;
    int b_hat = 0;
};

namespace detail {

// Agglomerative engine over a precomputed gram matrix. Pairwise values are
// cached and only pairs involving the newly merged group are recomputed, so a
// full run costs O(p) value updates per merge.
class CancorClusterEngine {
  public:
    CancorClusterEngine(const DesignMatrix& x, double rank_tol)
        : x_(x.data),
          gram_((x.data.transpose() * x.data) / static_cast<double>(x.data.rows())),
          n_(x.data.rows()),
          rank_tol_(rank_tol) {
        const int p = static_cast<int>(x.data.cols());
        const int max_slots = 2 * p - 1;
        values_.assign(static_cast<std::size_t>(max_slots) * (max_slots - 1) / 2, 0.0);
        slots_.reserve(static_cast<std::size_t>(max_slots));
        alive_.reserve(static_cast<std::size_t>(max_slots));
        for (int j = 0; j < p; ++j) {
            slots_.push_back(make_slot({j}));
            alive_.push_back(1);
        }
        for (int b = 1; b < p; ++b)
            for (int a = 0; a < b; ++a) value_at(a, b) = pair_value(a, b);
    }

    int alive_count() const {
        int c = 0;
        for (char a : alive_) c += a;
        return c;
    }

    // Largest cached value among alive pairs, with the attaining pair; ties
    // within 1e-12 resolve to the pair whose (smaller id, larger id) key is
    // lexicographically least.
    struct MaxPair {
        double value = 0.0;
        int slot_a = -1;
        int slot_b = -1;
    };

    MaxPair max_pair() const {
        MaxPair best;
        best.value = current_max();
        std::pair<int, int> best_key{INT_MAX, INT_MAX};
        for (std::size_t b = 1; b < slots_.size(); ++b) {
            if (!alive_[b]) continue;
            for (std::size_t a = 0; a < b; ++a) {
                if (!alive_[a]) continue;
                if (value_at(static_cast<int>(a), static_cast<int>(b)) < best.value - 1e-12)
                    continue;
                const auto key = pair_key(static_cast<int>(a), static_cast<int>(b));
                if (key < best_key) {
                    best_key = key;
                    best.slot_a = static_cast<int>(a);
                    best.slot_b = static_cast<int>(b);
                }
            }
        }
        return best;
    }

    double current_max() const {
        double best = 0.0;
        for (std::size_t b = 1; b < slots_.size(); ++b) {
            if (!alive_[b]) continue;
            for (std::size_t a = 0; a < b; ++a)
                if (alive_[a]) best = std::max(best, value_at(static_cast<int>(a), static_cast<int>(b)));
        }
        return best;
    }

    // Merges two slots and refreshes cached values against the new group.
    // Returns (smaller id, larger id) of the merged pair.
    std::pair<int, int> merge(int slot_a, int slot_b) {
        std::vector<int> members;
        members.reserve(slots_[static_cast<std::size_t>(slot_a)].members.size() +
                        slots_[static_cast<std::size_t>(slot_b)].members.size());
        std::merge(slots_[static_cast<std::size_t>(slot_a)].members.begin(),
                   slots_[static_cast<std::size_t>(slot_a)].members.end(),
                   slots_[static_cast<std::size_t>(slot_b)].members.begin(),
                   slots_[static_cast<std::size_t>(slot_b)].members.end(),
                   std::back_inserter(members));
        const auto ids = pair_key(slot_a, slot_b);
        alive_[static_cast<std::size_t>(slot_a)] = 0;
        alive_[static_cast<std::size_t>(slot_b)] = 0;
        const int fresh = static_cast<int>(slots_.size());
        slots_.push_back(make_slot(std::move(members)));
        alive_.push_back(1);
        for (int other = 0; other < fresh; ++other)
            if (alive_[static_cast<std::size_t>(other)])
                value_at(other, fresh) = pair_value(other, fresh);
        return ids;
    }

    Partition current_partition(int p) const {
        std::vector<std::vector<int>> raw;
        for (std::size_t s = 0; s < slots_.size(); ++s)
            if (alive_[s]) raw.push_back(slots_[s].members);
        return Partition::of(std::move(raw), p);
    }

  private:
    struct Slot {
        std::vector<int> members;
        int id = 0;
        int rank = 0;
        bool has_whitener = false;
        Eigen::MatrixXd whitener;
    };

    std::pair<int, int> pair_key(int a, int b) const {
        const int ia = slots_[static_cast<std::size_t>(a)].id;
        const int ib = slots_[static_cast<std::size_t>(b)].id;
        return {std::min(ia, ib), std::max(ia, ib)};
    }

    double& value_at(int a, int b) {
        const auto [lo, hi] = std::minmax(a, b);
        return values_[static_cast<std::size_t>(hi) * (hi - 1) / 2 + lo];
    }

    double value_at(int a, int b) const {
        const auto [lo, hi] = std::minmax(a, b);
        return values_[static_cast<std::size_t>(hi) * (hi - 1) / 2 + lo];
    }

    Eigen::MatrixXd gram_block(const std::vector<int>& rows, const std::vector<int>& cols) const {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                            static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    gram_(rows[i], cols[j]);
        return out;
    }

    Slot make_slot(std::vector<int> members) {
        Slot slot;
        slot.id = members.front();
        const auto m = static_cast<Eigen::Index>(members.size());
        if (m == 1) {
            slot.rank = gram_(members[0], members[0]) > 0.0 ? 1 : 0;
        } else if (m <= n_) {
            slot.whitener = pseudo_inverse_sqrt(gram_block(members, members), rank_tol_, &slot.rank);
            slot.has_whitener = true;
        } else {
            // Wide group: rank from the n x n outer product, whitener deferred.
            const Eigen::MatrixXd cols = select_columns(x_, members);
            const Eigen::MatrixXd outer = (cols * cols.transpose()) / static_cast<double>(n_);
            const SymEigen decomp = sym_eigen(outer);
            const double cut = rank_tol_ * std::max(decomp.values(0), 0.0);
            slot.rank = 0;
            for (Eigen::Index i = 0; i < decomp.values.size(); ++i)
                if (decomp.values(i) > cut && decomp.values(i) > 0.0) ++slot.rank;
        }
        slot.members = std::move(members);
        return slot;
    }

    const Eigen::MatrixXd& whitener(int s) {
        Slot& slot = slots_[static_cast<std::size_t>(s)];
        if (!slot.has_whitener) {
            slot.whitener = pseudo_inverse_sqrt(gram_block(slot.members, slot.members), rank_tol_,
                                                &slot.rank);
            slot.has_whitener = true;
        }
        return slot.whitener;
    }

    double pair_value(int a, int b) {
        const Slot& sa = slots_[static_cast<std::size_t>(a)];
        const Slot& sb = slots_[static_cast<std::size_t>(b)];
        if (sa.members.size() == 1 && sb.members.size() == 1) {
            const double va = gram_(sa.members[0], sa.members[0]);
            const double vb = gram_(sb.members[0], sb.members[0]);
            if (va <= 0.0 || vb <= 0.0) return 0.0;
            return std::clamp(std::abs(gram_(sa.members[0], sb.members[0])) / std::sqrt(va * vb),
                              0.0, 1.0);
        }
        if (sa.rank == 0 || sb.rank == 0) return 0.0;
        if (static_cast<Eigen::Index>(sa.rank + sb.rank) > n_) return 1.0;
        const Eigen::MatrixXd m =
            whitener(a) * gram_block(sa.members, sb.members) * whitener(b);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        return std::clamp(svd.singularValues()(0), 0.0, 1.0);
    }

    const Eigen::MatrixXd x_;
    const Eigen::MatrixXd gram_;
    const Eigen::Index n_;
    const double rank_tol_;
    std::vector<Slot> slots_;
    std::vector<char> alive_;
    std::vector<double> values_;
};

}  // namespace detail

/// Bottom-up agglomerative clustering on canonical correlations: repeatedly
/// merges the pair of groups with the highest canonical correlation until the
/// maximal between-group value drops to tau or below. When no nontrivial
/// partition satisfies the threshold the loop runs down to the single cluster,
/// whose value is 0 by convention.
inline ClusterResult cancor_cluster(const DesignMatrix& x, double tau,
                                    double rank_tol = kDefaultRankTol) {
    x.validate();
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
    const int p = static_cast<int>(x.p());
    detail::CancorClusterEngine engine(x, rank_tol);
    MergeTrace trace;
    trace.initial_value = p > 1 ? engine.current_max() : 0.0;
    int b = 0;
    while (engine.alive_count() > 1) {
        const auto top = engine.max_pair();
        if (top.value <= tau) break;
        const auto ids = engine.merge(top.slot_a, top.slot_b);
        ++b;
        trace.steps.push_back({b, ids.first, ids.second, engine.current_max()});
    }
    return {engine.current_partition(p), std::move(trace)};
}

/// Runs the merge loop all the way to the single cluster, recording the
/// maximal between-group canonical correlation after every merge, and returns
/// the partition at the iteration minimizing that value. Iteration 0 (all
/// singletons) is a candidate; the final single-cluster step is not, since its
/// value is 0 only by convention. Ties resolve to the earliest (finest)
/// iteration.
inline AutoClusterResult cancor_cluster_auto(const DesignMatrix& x,
                                             double rank_tol = kDefaultRankTol) {
    x.validate();
    const int p = static_cast<int>(x.p());
    if (p < 2) throw std::invalid_argument("auto clustering requires p >= 2");
    detail::CancorClusterEngine engine(x, rank_tol);
    MergeTrace trace;
    trace.initial_value = engine.current_max();
    int b = 0;
    while (engine.alive_count() > 1) {
        const auto top = engine.max_pair();
        const auto ids = engine.merge(top.slot_a, top.slot_b);
        ++b;
        trace.steps.push_back({b, ids.first, ids.second, engine.current_max()});
    }
    int b_hat = 0;
    double best = trace.initial_value;
    for (int i = 1; i <= p - 2; ++i) {
        const double v = trace.steps[static_cast<std::size_t>(i - 1)].value;
        if (v < best) {
            best = v;
            b_hat = i;
        }
    }
    return {partition_at(trace, p, b_hat), std::move(trace), b_hat};
}

/// Agglomerative average-linkage clustering on the dissimilarity
/// 1 - |sample correlation|. The returned partition is the one preceding the
/// largest jump between consecutive linkage heights; ties resolve to the
/// earliest gap, and with only two columns the singleton partition is kept
/// (no height gap exists). Zero-variance columns get dissimilarity 1 to
/// every other column.
inline ClusterResult corr_hclust(const DesignMatrix& x) {
    x.validate();
    const int p = static_cast<int>(x.p());
    if (p < 2) throw std::invalid_argument("clustering requires p >= 2");
    const double n = static_cast<double>(x.n());

    const Eigen::VectorXd means = x.data.colwise().mean();
    const Eigen::MatrixXd centered = x.data.rowwise() - means.transpose();
    const Eigen::VectorXd sq = centered.colwise().squaredNorm() / n;
    Eigen::MatrixXd dissim(p, p);
    for (int j = 0; j < p; ++j) {
        dissim(j, j) = 0.0;
        for (int k = j + 1; k < p; ++k) {
            double d = 1.0;
            if (sq(j) > 0.0 && sq(k) > 0.0) {
                const double corr = centered.col(j).dot(centered.col(k)) / n /
                                    std::sqrt(sq(j) * sq(k));
                d = 1.0 - std::min(std::abs(corr), 1.0);
            }
            dissim(j, k) = d;
            dissim(k, j) = d;
        }
    }

    std::vector<std::vector<int>> members(static_cast<std::size_t>(p));
    std::vector<char> alive(static_cast<std::size_t>(p), 1);
    for (int j = 0; j < p; ++j) members[static_cast<std::size_t>(j)] = {j};

    MergeTrace trace;
    std::vector<double> heights;
    heights.reserve(static_cast<std::size_t>(p - 1));
    for (int b = 1; b < p; ++b) {
        double best = std::numeric_limits<double>::infinity();
        for (int k = 1; k < p; ++k) {
            if (!alive[static_cast<std::size_t>(k)]) continue;
            for (int j = 0; j < k; ++j)
                if (alive[static_cast<std::size_t>(j)]) best = std::min(best, dissim(j, k));
        }
        int best_a = -1, best_b = -1;
        std::pair<int, int> best_key{INT_MAX, INT_MAX};
        for (int k = 1; k < p; ++k) {
            if (!alive[static_cast<std::size_t>(k)]) continue;
            for (int j = 0; j < k; ++j) {
                if (!alive[static_cast<std::size_t>(j)] || dissim(j, k) > best + 1e-12) continue;
                const int ja = members[static_cast<std::size_t>(j)].front();
                const int ka = members[static_cast<std::size_t>(k)].front();
                const std::pair<int, int> key{std::min(ja, ka), std::max(ja, ka)};
                if (key < best_key) {
                    best_key = key;
                    best_a = j;
                    best_b = k;
                }
            }
        }
        const int ia = members[static_cast<std::size_t>(best_a)].front();
        const int ib = members[static_cast<std::size_t>(best_b)].front();
        const double wa = static_cast<double>(members[static_cast<std::size_t>(best_a)].size());
        const double wb = static_cast<double>(members[static_cast<std::size_t>(best_b)].size());
        // Average-linkage update for the surviving slot.
        for (int other = 0; other < p; ++other) {
            if (!alive[static_cast<std::size_t>(other)] || other == best_a || other == best_b)
                continue;
            const double d = (wa * dissim(best_a, other) + wb * dissim(best_b, other)) / (wa + wb);
            dissim(best_a, other) = d;
            dissim(other, best_a) = d;
        }
        std::vector<int> merged;
        std::merge(members[static_cast<std::size_t>(best_a)].begin(),
                   members[static_cast<std::size_t>(best_a)].end(),
                   members[static_cast<std::size_t>(best_b)].begin(),
                   members[static_cast<std::size_t>(best_b)].end(), std::back_inserter(merged));
        members[static_cast<std::size_t>(best_a)] = std::move(merged);
        alive[static_cast<std::size_t>(best_b)] = 0;
        heights.push_back(best);
        trace.steps.push_back({b, std::min(ia, ib), std::max(ia, ib), best});
    }

    int b_hat = 0;
    double best_gap = -std::numeric_limits<double>::infinity();
    for (int b = 1; b <= p - 2; ++b) {
        const double gap =
            heights[static_cast<std::size_t>(b)] - heights[static_cast<std::size_t>(b - 1)];
        if (gap > best_gap) {
            best_gap = gap;
            b_hat = b;
        }
    }
    return {partition_at(trace, p, b_hat), std::move(trace)};
}

/// Threshold matrix controlling when the clustering recovers a population
/// partition: entries grow with group ranks and shrink with sample size.
/// Entries where a group-level deviation bound reaches 1 are set to infinity.
inline Eigen::MatrixXd consistency_thresholds(int n, int q, const std::vector<int>& ranks,
                                              double t) {
    if (n < 1 || q < 1) throw std::invalid_argument("n and q must be positive");
    if (static_cast<int>(ranks.size()) != q)
        throw std::invalid_argument("one rank per group is required");
    const double tail = std::sqrt((2.0 / n) * (t + std::log(static_cast<double>(q) * (q + 1.0))));
    Eigen::VectorXd tr(q);
    for (int r = 0; r < q; ++r)
        tr(r) = std::sqrt(static_cast<double>(ranks[static_cast<std::size_t>(r)]) / n) + tail;
    Eigen::MatrixXd delta(q, q);
    for (int r = 0; r < q; ++r)
        for (int l = 0; l < q; ++l) {
            if (tr(r) >= 1.0 || tr(l) >= 1.0) {
                delta(r, l) = std::numeric_limits<double>::infinity();
            } else {
                const double lo = std::min(tr(r), tr(l));
                const double hi = std::max(tr(r), tr(l));
                delta(r, l) = (3.0 * lo + hi) / ((1.0 - tr(r)) * (1.0 - tr(l)));
            }
        }
    return delta;
}

}  // namespace cluslasso
