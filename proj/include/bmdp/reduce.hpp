#pragma once

#include <stdexcept>

#include "bmdp/bmdp.hpp"
#include "bmdp/formula.hpp"
#include "bmdp/mdp.hpp"

namespace bmdp {

/// Absolute tolerance for treating two reals as equal when comparing
/// rewards, block probabilities and spread bounds.
inline constexpr double kEqualityTolerance = 1e-12;

/// Compensated accumulator. Block-probability sums can run over thousands of
/// entries, where plain summation error approaches kEqualityTolerance; every
/// pipeline that feeds those sums into equality checks uses this instead.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

/// Partition of {0, ..., n_states-1}. Canonical form: each block holds its
/// states in ascending order and blocks are ordered by their smallest state.
struct Partition {
    int n_states = 0;
    std::vector<std::vector<int>> blocks;
    std::vector<int> block_of;  ///< block index per state

    int size() const { return static_cast<int>(blocks.size()); }

    /// Builds the canonical partition from arbitrary block lists. Throws
    /// std::invalid_argument unless the blocks are nonempty, disjoint and
    /// cover every state exactly once.
    static Partition from_blocks(int n_states, std::vector<std::vector<int>> blocks);

    static Partition singletons(int n_states);

    friend bool operator==(const Partition&, const Partition&) = default;
};

/// One refinement step: `parent` was split against the pre-pass block
/// `witness_block` because action `witness_action` spread block-transition
/// probabilities wider than epsilon. Explicit reductions fill the state
/// lists, symbolic reductions the formulas.
struct SplitEvent {
    int pass = 0;
    int parent_block = -1;
    int witness_block = -1;
    int witness_action = -1;
    std::vector<int> parent_states;
    std::vector<std::vector<int>> sub_blocks;
    BlockFormula parent_formula;
    std::vector<BlockFormula> sub_formulas;
};

struct ReductionTrace {
    double epsilon = 0.0;
    int passes = 0;
    bool symbolic = false;
    std::vector<SplitEvent> events;
};

/// Blocks of states whose rewards agree within kEqualityTolerance, formed by
/// epsilon-uniform clustering of the scalar rewards at epsilon 0.
Partition immediate_reward_partition(const ExplicitMdp& m);

/// Reward clustering at the reduction's epsilon; the starting point of
/// reduce_model, exposed so traces can be replayed.
Partition initial_reward_clustering(const ExplicitMdp& m, double epsilon);

/// Groups vectors so that within each group every coordinate spans at most
/// epsilon + kEqualityTolerance. Deterministic two-phase scheme: a greedy
/// sweep in lexicographic vector order seeds groups, then pairwise merges
/// run to quiescence so the grouping does not depend on seed order. Returns
/// groups of input indices, each ascending, in group-formation order.
std::vector<std::vector<int>> cluster_epsilon_uniform(const std::vector<std::vector<double>>& items,
                                                      double epsilon);

/// Probability of landing anywhere in `block` from `state` under `action`.
double block_transition_prob(const ExplicitMdp& m, int state, int action,
                             const std::vector<int>& block);

/// True when block C is epsilon-stable with respect to block B: for every
/// action, the block-transition probabilities into B spread at most
/// epsilon + kEqualityTolerance across the states of C.
bool check_block_stability(const ExplicitMdp& m, const Partition& p, int block_c, int block_b,
                           double epsilon);

/// Splits C into maximal sub-blocks that are epsilon-stable with respect to
/// B, by clustering the per-state vectors of block-transition probabilities
/// into B (one coordinate per action). Returns {C} when C is already stable.
std::vector<std::vector<int>> split_block(const ExplicitMdp& m, const std::vector<int>& block_c,
                                          const std::vector<int>& block_b, double epsilon);

struct ReduceResult {
    Partition partition;
    ReductionTrace trace;
};

/// Epsilon-homogeneous partition by iterative refinement. Starts from the
/// reward clustering and runs full passes: each pass splits every block
/// against every block of the pre-pass partition until a pass makes no
/// change. The final partition is epsilon-homogeneous and never finer than
/// the exact (epsilon 0) minimal model.
ReduceResult reduce_model(const ExplicitMdp& m, double epsilon);

/// Bounded-parameter MDP over the blocks of p: reward intervals span the
/// member rewards of each block, transition intervals the member
/// block-transition probabilities. Entries whose upper bound is zero are
/// dropped. Block indices of p become the BMDP's states.
Bmdp induce_bmdp(const ExplicitMdp& m, const Partition& p);

/// Pulls a per-block table back to the original states.
template <typename T>
std::vector<T> lift_block_function(const Partition& p, const std::vector<T>& block_values) {
    if (static_cast<int>(block_values.size()) != p.size())
        throw std::invalid_argument("block table size does not match partition");
    std::vector<T> lifted(p.n_states);
    for (int s = 0; s < p.n_states; ++s) lifted[s] = block_values[p.block_of[s]];
    return lifted;
}

struct HomogeneityReport {
    bool ok = false;
    double max_reward_spread = 0.0;
    double max_transition_spread = 0.0;
    std::vector<std::string> violations;
};

/// Checks epsilon-homogeneity of p directly from the definition: reward
/// spread within each block and, for every action and pair of blocks, the
/// spread of block-transition probabilities.
HomogeneityReport verify_homogeneous(const ExplicitMdp& m, const Partition& p, double epsilon);

/// Reapplies the recorded split events to `initial`, which must be the
/// reduction's starting partition. The result equals the reduction's output.
Partition replay_trace(const Partition& initial, const ReductionTrace& trace);

/// Formula-level replay for symbolic traces.
std::vector<BlockFormula> replay_trace_formulas(const std::vector<BlockFormula>& initial,
                                                const ReductionTrace& trace);

}  // namespace bmdp
