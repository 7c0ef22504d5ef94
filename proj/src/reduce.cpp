#include "bmdp/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bmdp {

namespace {

void require_valid(const ExplicitMdp& m) {
    ValidationReport rep = validate_mdp(m);
    if (!rep.ok()) throw std::invalid_argument("invalid mdp: " + rep.violations.front());
}

void require_epsilon(double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw std::invalid_argument("epsilon must lie in [0, 1)");
}

/// Structural check of the canonical-partition invariant.
void require_partition(const Partition& p) {
    if (p.n_states <= 0) throw std::invalid_argument("partition over no states");
    if (static_cast<int>(p.block_of.size()) != p.n_states)
        throw std::invalid_argument("partition block_of size mismatch");
    std::vector<char> seen(p.n_states, 0);
    int prev_front = -1;
    for (std::size_t bi = 0; bi < p.blocks.size(); ++bi) {
        const std::vector<int>& block = p.blocks[bi];
        if (block.empty()) throw std::invalid_argument("partition has an empty block");
        if (block.front() <= prev_front)
            throw std::invalid_argument("partition blocks not ordered by smallest state");
        prev_front = block.front();
        int prev = -1;
        for (int s : block) {
            if (s < 0 || s >= p.n_states) throw std::invalid_argument("partition state out of range");
            if (s <= prev) throw std::invalid_argument("partition block not in ascending order");
            if (seen[s]) throw std::invalid_argument("partition state in two blocks");
            seen[s] = 1;
            prev = s;
            if (p.block_of[s] != static_cast<int>(bi))
                throw std::invalid_argument("partition block_of inconsistent with blocks");
        }
    }
    for (int s = 0; s < p.n_states; ++s)
        if (!seen[s]) throw std::invalid_argument("partition does not cover every state");
}

double masked_row_sum(const TransitionRow& row, const std::vector<char>& mask) {
    KahanSum sum;
    for (const TransitionEntry& e : row)
        if (mask[e.to]) sum.add(e.prob);
    return sum.value();
}

}  // namespace

Partition Partition::from_blocks(int n_states, std::vector<std::vector<int>> blocks) {
    Partition p;
    p.n_states = n_states;
    if (n_states <= 0) throw std::invalid_argument("partition over no states");
    for (std::vector<int>& block : blocks) std::sort(block.begin(), block.end());
    std::sort(blocks.begin(), blocks.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) {
                  if (a.empty() || b.empty()) return b.empty() && !a.empty();
                  return a.front() < b.front();
              });
    p.blocks = std::move(blocks);
    p.block_of.assign(n_states, -1);
    for (std::size_t bi = 0; bi < p.blocks.size(); ++bi) {
        const std::vector<int>& block = p.blocks[bi];
        if (block.empty()) throw std::invalid_argument("partition has an empty block");
        for (int s : block) {
            if (s < 0 || s >= n_states) throw std::invalid_argument("partition state out of range");
            if (p.block_of[s] >= 0) throw std::invalid_argument("partition state in two blocks");
            p.block_of[s] = static_cast<int>(bi);
        }
    }
    for (int s = 0; s < n_states; ++s)
        if (p.block_of[s] < 0) throw std::invalid_argument("partition does not cover every state");
    return p;
}

Partition Partition::singletons(int n_states) {
    std::vector<std::vector<int>> blocks(n_states);
    for (int s = 0; s < n_states; ++s) blocks[s] = {s};
    return from_blocks(n_states, std::move(blocks));
}

std::vector<std::vector<int>> cluster_epsilon_uniform(const std::vector<std::vector<double>>& items,
                                                      double epsilon) {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
    const int n = static_cast<int>(items.size());
    if (n == 0) return {};
    const std::size_t dim = items[0].size();
    for (const std::vector<double>& item : items)
        if (item.size() != dim) throw std::invalid_argument("items must share one dimension");
    const double limit = epsilon + kEqualityTolerance;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        if (items[i] != items[j]) return items[i] < items[j];
        return i < j;
    });

    struct Cluster {
        std::vector<int> members;
        std::vector<double> lo, hi;
    };
    std::vector<Cluster> clusters;
    for (int idx : order) {
        const std::vector<double>& x = items[idx];
        bool placed = false;
        for (Cluster& c : clusters) {
            bool fits = true;
            for (std::size_t d = 0; d < dim; ++d)
                if (std::max(c.hi[d], x[d]) - std::min(c.lo[d], x[d]) > limit) {
                    fits = false;
                    break;
                }
            if (fits) {
                c.members.push_back(idx);
                for (std::size_t d = 0; d < dim; ++d) {
                    c.lo[d] = std::min(c.lo[d], x[d]);
                    c.hi[d] = std::max(c.hi[d], x[d]);
                }
                placed = true;
                break;
            }
        }
        if (!placed) clusters.push_back({{idx}, x, x});
    }

    // The greedy seeds can leave mergeable neighbors; merging to quiescence
    // makes the grouping independent of the seeding order.
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t i = 0; i < clusters.size() && !merged; ++i)
            for (std::size_t j = i + 1; j < clusters.size() && !merged; ++j) {
                bool fits = true;
                for (std::size_t d = 0; d < dim; ++d)
                    if (std::max(clusters[i].hi[d], clusters[j].hi[d]) -
                            std::min(clusters[i].lo[d], clusters[j].lo[d]) >
                        limit) {
                        fits = false;
                        break;
                    }
                if (!fits) continue;
                Cluster& into = clusters[i];
                Cluster& from = clusters[j];
                into.members.insert(into.members.end(), from.members.begin(), from.members.end());
                for (std::size_t d = 0; d < dim; ++d) {
                    into.lo[d] = std::min(into.lo[d], from.lo[d]);
                    into.hi[d] = std::max(into.hi[d], from.hi[d]);
                }
                clusters.erase(clusters.begin() + j);
                merged = true;
            }
    }

    std::vector<std::vector<int>> result;
    result.reserve(clusters.size());
    for (Cluster& c : clusters) {
        std::sort(c.members.begin(), c.members.end());
        result.push_back(std::move(c.members));
    }
    return result;
}

Partition initial_reward_clustering(const ExplicitMdp& m, double epsilon) {
    require_valid(m);
    std::vector<std::vector<double>> items(m.n_states);
    for (int s = 0; s < m.n_states; ++s) items[s] = {m.rewards[s]};
    return Partition::from_blocks(m.n_states, cluster_epsilon_uniform(items, epsilon));
}

Partition immediate_reward_partition(const ExplicitMdp& m) {
    return initial_reward_clustering(m, 0.0);
}

double block_transition_prob(const ExplicitMdp& m, int state, int action,
                             const std::vector<int>& block) {
    if (state < 0 || state >= m.n_states) throw std::invalid_argument("state out of range");
    if (action < 0 || action >= m.n_actions) throw std::invalid_argument("action out of range");
    std::vector<char> mask(m.n_states, 0);
    for (int q : block) {
        if (q < 0 || q >= m.n_states) throw std::invalid_argument("block state out of range");
        mask[q] = 1;
    }
    return masked_row_sum(m.row(action, state), mask);
}

bool check_block_stability(const ExplicitMdp& m, const Partition& p, int block_c, int block_b,
                           double epsilon) {
    require_partition(p);
    if (p.n_states != m.n_states)
        throw std::invalid_argument("partition does not match the model's states");
    if (block_c < 0 || block_c >= p.size() || block_b < 0 || block_b >= p.size())
        throw std::invalid_argument("block index out of range");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
    std::vector<char> mask(m.n_states, 0);
    for (int q : p.blocks[block_b]) mask[q] = 1;
    for (int a = 0; a < m.n_actions; ++a) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int s : p.blocks[block_c]) {
            const double v = masked_row_sum(m.row(a, s), mask);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > epsilon + kEqualityTolerance) return false;
    }
    return true;
}

std::vector<std::vector<int>> split_block(const ExplicitMdp& m, const std::vector<int>& block_c,
                                          const std::vector<int>& block_b, double epsilon) {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
    if (block_c.empty()) return {};
    std::vector<char> mask(m.n_states, 0);
    for (int q : block_b) {
        if (q < 0 || q >= m.n_states) throw std::invalid_argument("block state out of range");
        mask[q] = 1;
    }
    std::vector<std::vector<double>> items(block_c.size());
    for (std::size_t t = 0; t < block_c.size(); ++t) {
        const int s = block_c[t];
        if (s < 0 || s >= m.n_states) throw std::invalid_argument("block state out of range");
        items[t].resize(m.n_actions);
        for (int a = 0; a < m.n_actions; ++a) items[t][a] = masked_row_sum(m.row(a, s), mask);
    }
    std::vector<std::vector<int>> result;
    for (const std::vector<int>& cluster : cluster_epsilon_uniform(items, epsilon)) {
        std::vector<int> sub;
        sub.reserve(cluster.size());
        for (int pos : cluster) sub.push_back(block_c[pos]);
        std::sort(sub.begin(), sub.end());
        result.push_back(std::move(sub));
    }
    return result;
}

ReduceResult reduce_model(const ExplicitMdp& m, double epsilon) {
    require_valid(m);
    require_epsilon(epsilon);
    ReduceResult result;
    result.trace.epsilon = epsilon;

    Partition part = initial_reward_clustering(m, epsilon);
    const int A = m.n_actions;
    const double limit = epsilon + kEqualityTolerance;
    int pass = 0;
    std::vector<KahanSum> sums;
    for (;;) {
        ++pass;
        // Every splitting pass grows the block count, so this cannot trigger
        // on a well-formed model.
        if (pass > m.n_states + 1) throw std::logic_error("reduction did not quiesce");
        const int n_blocks = part.size();
        bool any_split = false;
        std::vector<std::vector<int>> next_blocks;
        next_blocks.reserve(n_blocks);

        for (int ci = 0; ci < n_blocks; ++ci) {
            const std::vector<int>& c = part.blocks[ci];
            const int csz = static_cast<int>(c.size());
            if (csz == 1) {
                next_blocks.push_back(c);
                continue;
            }
            // Block-transition signature of every member against the whole
            // pre-pass partition, one row scan per (member, action).
            sums.assign(static_cast<std::size_t>(csz) * A * n_blocks, KahanSum{});
#pragma omp parallel for schedule(static)
            for (int k = 0; k < csz; ++k) {
                for (int a = 0; a < A; ++a) {
                    KahanSum* bins = &sums[(static_cast<std::size_t>(k) * A + a) * n_blocks];
                    for (const TransitionEntry& e : m.row(a, c[k]))
                        bins[part.block_of[e.to]].add(e.prob);
                }
            }

            std::vector<std::vector<int>> pieces(1);
            pieces[0].resize(csz);
            std::iota(pieces[0].begin(), pieces[0].end(), 0);
            for (int bi = 0; bi < n_blocks; ++bi) {
                std::vector<std::vector<int>> refined;
                refined.reserve(pieces.size());
                for (std::vector<int>& piece : pieces) {
                    if (piece.size() == 1) {
                        refined.push_back(std::move(piece));
                        continue;
                    }
                    std::vector<std::vector<double>> items(piece.size());
                    for (std::size_t t = 0; t < piece.size(); ++t) {
                        items[t].resize(A);
                        for (int a = 0; a < A; ++a)
                            items[t][a] =
                                sums[(static_cast<std::size_t>(piece[t]) * A + a) * n_blocks + bi]
                                    .value();
                    }
                    std::vector<std::vector<int>> clusters =
                        cluster_epsilon_uniform(items, epsilon);
                    if (clusters.size() == 1) {
                        refined.push_back(std::move(piece));
                        continue;
                    }
                    any_split = true;
                    SplitEvent ev;
                    ev.pass = pass;
                    ev.parent_block = ci;
                    ev.witness_block = bi;
                    for (int a = 0; a < A && ev.witness_action < 0; ++a) {
                        double lo = std::numeric_limits<double>::infinity();
                        double hi = -lo;
                        for (int t : piece) {
                            const double v =
                                sums[(static_cast<std::size_t>(t) * A + a) * n_blocks + bi]
                                    .value();
                            lo = std::min(lo, v);
                            hi = std::max(hi, v);
                        }
                        if (hi - lo > limit) ev.witness_action = a;
                    }
                    ev.parent_states.reserve(piece.size());
                    for (int t : piece) ev.parent_states.push_back(c[t]);
                    for (const std::vector<int>& cluster : clusters) {
                        std::vector<int> sub_local;
                        std::vector<int> sub_states;
                        sub_local.reserve(cluster.size());
                        sub_states.reserve(cluster.size());
                        for (int pos : cluster) {
                            sub_local.push_back(piece[pos]);
                            sub_states.push_back(c[piece[pos]]);
                        }
                        ev.sub_blocks.push_back(std::move(sub_states));
                        refined.push_back(std::move(sub_local));
                    }
                    result.trace.events.push_back(std::move(ev));
                }
                pieces = std::move(refined);
            }
            for (const std::vector<int>& piece : pieces) {
                std::vector<int> states;
                states.reserve(piece.size());
                for (int t : piece) states.push_back(c[t]);
                next_blocks.push_back(std::move(states));
            }
        }

        part = Partition::from_blocks(m.n_states, std::move(next_blocks));
        if (!any_split) break;
    }
    result.trace.passes = pass;
    result.partition = std::move(part);
    return result;
}

Bmdp induce_bmdp(const ExplicitMdp& m, const Partition& p) {
    require_valid(m);
    require_partition(p);
    if (p.n_states != m.n_states)
        throw std::invalid_argument("partition does not match the model's states");

    const int K = p.size();
    const int A = m.n_actions;
    Bmdp b = Bmdp::zeros(K, A, m.discount);
    for (int bi = 0; bi < K; ++bi) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int s : p.blocks[bi]) {
            lo = std::min(lo, m.rewards[s]);
            hi = std::max(hi, m.rewards[s]);
        }
        b.reward_bounds[bi] = {lo, hi};
    }

    std::vector<KahanSum> bins(K);
    std::vector<double> minv(K), maxv(K);
    for (int a = 0; a < A; ++a) {
        for (int bi = 0; bi < K; ++bi) {
            std::fill(minv.begin(), minv.end(), std::numeric_limits<double>::infinity());
            std::fill(maxv.begin(), maxv.end(), 0.0);
            for (int s : p.blocks[bi]) {
                std::fill(bins.begin(), bins.end(), KahanSum{});
                for (const TransitionEntry& e : m.row(a, s)) bins[p.block_of[e.to]].add(e.prob);
                for (int j = 0; j < K; ++j) {
                    minv[j] = std::min(minv[j], bins[j].value());
                    maxv[j] = std::max(maxv[j], bins[j].value());
                }
            }
            BoundedTransitionRow& row = b.row(a, bi);
            // Block sums are probabilities; clamp away the summation ulps so
            // the result always validates.
            for (int j = 0; j < K; ++j)
                if (maxv[j] > 0.0)
                    row.push_back(
                        {j, {std::clamp(minv[j], 0.0, 1.0), std::clamp(maxv[j], 0.0, 1.0)}});
        }
    }
    return b;
}

HomogeneityReport verify_homogeneous(const ExplicitMdp& m, const Partition& p, double epsilon) {
    require_valid(m);
    require_partition(p);
    if (p.n_states != m.n_states)
        throw std::invalid_argument("partition does not match the model's states");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");

    HomogeneityReport rep;
    const double limit = epsilon + kEqualityTolerance;
    const int K = p.size();
    const int A = m.n_actions;

    for (int bi = 0; bi < K; ++bi) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int s : p.blocks[bi]) {
            lo = std::min(lo, m.rewards[s]);
            hi = std::max(hi, m.rewards[s]);
        }
        rep.max_reward_spread = std::max(rep.max_reward_spread, hi - lo);
        if (hi - lo > limit) {
            std::ostringstream out;
            out << "block " << bi << " reward spread " << (hi - lo) << " exceeds epsilon";
            rep.violations.push_back(out.str());
        }
    }

    std::vector<KahanSum> bins(K);
    std::vector<double> minv(K), maxv(K);
    for (int a = 0; a < A; ++a) {
        for (int ci = 0; ci < K; ++ci) {
            std::fill(minv.begin(), minv.end(), std::numeric_limits<double>::infinity());
            std::fill(maxv.begin(), maxv.end(), 0.0);
            for (int s : p.blocks[ci]) {
                std::fill(bins.begin(), bins.end(), KahanSum{});
                for (const TransitionEntry& e : m.row(a, s)) bins[p.block_of[e.to]].add(e.prob);
                for (int j = 0; j < K; ++j) {
                    minv[j] = std::min(minv[j], bins[j].value());
                    maxv[j] = std::max(maxv[j], bins[j].value());
                }
            }
            for (int j = 0; j < K; ++j) {
                const double spread = maxv[j] - minv[j];
                rep.max_transition_spread = std::max(rep.max_transition_spread, spread);
                if (spread > limit) {
                    std::ostringstream out;
                    out << "transition spread " << spread << " from block " << ci << " to block "
                        << j << " under a" << a << " exceeds epsilon";
                    rep.violations.push_back(out.str());
                }
            }
        }
    }
    rep.ok = rep.violations.empty();
    return rep;
}

Partition replay_trace(const Partition& initial, const ReductionTrace& trace) {
    if (trace.symbolic)
        throw std::invalid_argument("symbolic trace does not carry state blocks");
    std::vector<std::vector<int>> work = initial.blocks;
    for (const SplitEvent& ev : trace.events) {
        auto it = std::find(work.begin(), work.end(), ev.parent_states);
        if (it == work.end()) throw std::invalid_argument("trace parent block not found");
        work.erase(it);
        work.insert(work.end(), ev.sub_blocks.begin(), ev.sub_blocks.end());
    }
    return Partition::from_blocks(initial.n_states, std::move(work));
}

std::vector<BlockFormula> replay_trace_formulas(const std::vector<BlockFormula>& initial,
                                                const ReductionTrace& trace) {
    if (!trace.symbolic) throw std::invalid_argument("explicit trace does not carry formulas");
    std::vector<BlockFormula> work = initial;
    for (const SplitEvent& ev : trace.events) {
        auto it = std::find(work.begin(), work.end(), ev.parent_formula);
        if (it == work.end()) throw std::invalid_argument("trace parent formula not found");
        work.erase(it);
        work.insert(work.end(), ev.sub_formulas.begin(), ev.sub_formulas.end());
    }
    std::sort(work.begin(), work.end(), [](const BlockFormula& a, const BlockFormula& b) {
        return formula_min_state(a) < formula_min_state(b);
    });
    return work;
}

}  // namespace bmdp
