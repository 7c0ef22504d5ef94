#pragma once

#include "bmdp/bmdp.hpp"
#include "bmdp/mdp.hpp"

namespace bmdp {

/// Which extreme of the interval family nature picks when resolving a row.
enum class OptMode { Minimize, Maximize };

/// Exact distribution inside an interval row that minimizes or maximizes the
/// expected value sum_q r_q * values[q]. Greedy order-based construction:
/// start every entry at its lower bound and push entries toward their upper
/// bounds in ascending (Minimize) or descending (Maximize) order of
/// values[to], until the remaining mass 1 - sum of lower bounds is used up.
/// Value ties are resolved in ascending to-state order. The result aligns
/// with the row entries. Throws std::invalid_argument when no distribution
/// fits the bounds.
std::vector<double> extreme_transition_vector(const BoundedTransitionRow& row,
                                              const ValueVector& values, OptMode mode);

struct ValueBounds {
    ValueVector lower;
    ValueVector upper;
    int iterations_lower = 0;
    int iterations_upper = 0;
};

struct BoundedValueResult {
    ValueVector lower;
    ValueVector upper;
    Policy pessimistic_policy;
    int iterations_lower = 0;
    int iterations_upper = 0;
};

/// Interval value iteration over the whole family. The lower bound iterates
///   V(p) = R_lo(p) + g * max_a min_F sum_q F_pq(a) V(q)
/// and the upper bound the same with R_hi and max over F, each by Jacobi
/// sweeps from 0 with the same stop rule as value_iterate. For every member
/// of the family, its optimal values lie within [lower - tol, upper + tol].
/// Also returns the pessimistic policy extracted from the lower bound.
BoundedValueResult ivi_bound_optimal(const Bmdp& b, double tol, Exec exec = Exec::Parallel);

/// Value bounds of one fixed policy across the family: the same iterations
/// with the action pinned to policy[p] instead of maximized.
ValueBounds ivi_bound_policy(const Bmdp& b, const Policy& policy, double tol,
                             Exec exec = Exec::Parallel);

/// Greedy policy on the lower-bound values: argmax over actions of
/// R_lo(p) + g * min_F sum_q F_pq(a) lower(q), ties within kTieTolerance
/// broken toward the smallest action index.
Policy extract_pessimistic_policy(const Bmdp& b, const ValueVector& lower);

/// Member MDP whose rows realize the extreme distributions for the given
/// value vector; rewards take R_lo (Minimize) or R_hi (Maximize). Applying
/// this to the converged lower bound yields the worst member for it.
ExplicitMdp materialize_extreme_mdp(const Bmdp& b, const ValueVector& values, OptMode mode);

}  // namespace bmdp
