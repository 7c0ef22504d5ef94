#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "bmdp/bmdp.hpp"
#include "bmdp/formula.hpp"
#include "bmdp/mdp.hpp"
#include "bmdp/reduce.hpp"

namespace bmdp {

/// Raised when a symbolic operation would enumerate more regions than the
/// configured cap allows.
class SymbolicBudgetError : public std::runtime_error {
  public:
    explicit SymbolicBudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr int kDefaultRegionCap = 4096;

/// Expansion refuses models beyond this many fluents.
inline constexpr int kMaxExpandVars = 20;

/// Binary decision tree over fluents with real-valued leaves, stored as a
/// flat node array. Interior nodes test one fluent; no fluent repeats along
/// a root-to-leaf path.
class DecisionTree {
  public:
    struct Node {
        int var = -1;  ///< fluent tested; negative marks a leaf
        double value = 0.0;
        int yes = -1;
        int no = -1;
    };

    static DecisionTree leaf(double value);
    static DecisionTree test(int var, const DecisionTree& if_true, const DecisionTree& if_false);

    /// Leaf value reached from the encoded state (fluent i is bit i).
    double evaluate(std::uint32_t state_bits) const;

    struct PathLeaf {
        Term condition;  ///< conjunction of the tests along the path
        double value;
    };

    /// All root-to-leaf paths, true branch first, conditions canonical.
    std::vector<PathLeaf> paths() const;

    const std::vector<Node>& nodes() const { return nodes_; }
    int root() const { return root_; }

  private:
    std::vector<Node> nodes_;
    int root_ = -1;
};

/// Factored MDP over boolean fluents. Next-state fluents are independent
/// given the current state and action, each governed by its own decision
/// tree; the reward is a tree over current fluents.
struct FactoredMdp {
    std::vector<std::string> variables;
    std::vector<std::string> actions;
    double discount = 0.0;
    std::vector<DecisionTree> cpts;  ///< indexed by action * n_vars + var
    DecisionTree reward_tree;

    int n_vars() const { return static_cast<int>(variables.size()); }
    int n_actions() const { return static_cast<int>(actions.size()); }

    const DecisionTree& cpt(int action, int var) const {
        return cpts[static_cast<std::size_t>(action) * variables.size() + var];
    }
    DecisionTree& cpt(int action, int var) {
        return cpts[static_cast<std::size_t>(action) * variables.size() + var];
    }
};

ValidationReport validate_factored(const FactoredMdp& f);

/// Flat MDP over all 2^n_vars fluent assignments; state q has fluent i set
/// iff bit i of q is set. Transition rows multiply the per-fluent leaf
/// probabilities; zero-probability entries are dropped. Throws
/// std::invalid_argument beyond kMaxExpandVars fluents.
ExplicitMdp expand_to_explicit(const FactoredMdp& f);

/// Probability that the next state satisfies phi, from `state_bits` under
/// `action`: the sum over assignments of phi's variables that satisfy phi of
/// the product of per-fluent leaf probabilities.
double block_prob_factored(const FactoredMdp& f, std::uint32_t state_bits, int action,
                           const BlockFormula& phi);

/// Partition of the state space into regions on which every CPT relevant to
/// phi is constant: the product, over actions and phi's variables, of the
/// CPT path conditions. Regions are terms, mutually exclusive and
/// exhaustive. Throws SymbolicBudgetError past region_cap regions.
std::vector<Term> region_partition(const FactoredMdp& f, const BlockFormula& phi,
                                   int region_cap = kDefaultRegionCap);

/// Symbolic counterpart of split_block: refines block C against block B by
/// clustering the per-region block-transition vectors of the regions meeting
/// C. Returns {C} unchanged when C is already epsilon-stable.
std::vector<BlockFormula> symbolic_split(const FactoredMdp& f, const BlockFormula& c,
                                         const BlockFormula& b, double epsilon,
                                         int region_cap = kDefaultRegionCap);

struct SymbolicReduceResult {
    std::vector<BlockFormula> blocks;  ///< ordered by smallest satisfying state
    Bmdp bmdp;
    ReductionTrace trace;
};

/// Symbolic reduction mirroring reduce_model pass for pass: reward-tree
/// leaves seed the partition and full passes split every block against every
/// pre-pass block until quiescence, all without enumerating states. The
/// induced BMDP takes exact extrema over regions, so on expandable models it
/// matches the explicit pipeline.
SymbolicReduceResult symbolic_reduce(const FactoredMdp& f, double epsilon,
                                     int region_cap = kDefaultRegionCap);

/// States of the expanded space satisfying phi, ascending.
std::vector<int> formula_states(const BlockFormula& phi, int n_vars);

/// Denotation of block formulas as a state partition. Throws
/// std::invalid_argument unless the formulas cover every state exactly once.
Partition partition_from_formulas(const std::vector<BlockFormula>& blocks, int n_vars);

}  // namespace bmdp
