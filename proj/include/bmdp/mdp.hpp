#pragma once

#include <string>
#include <vector>

namespace bmdp {

/// Execution strategy for the iteration kernels. Parallel runs each sweep as
/// an OpenMP loop. Results are bit-identical to Serial because all sweeps are
/// Jacobi-style: every state update reads only the previous iterate.
enum class Exec { Serial, Parallel };

struct TransitionEntry {
    int to = 0;
    double prob = 0.0;

    friend bool operator==(const TransitionEntry&, const TransitionEntry&) = default;
};

/// Sparse transition row, kept in ascending to-state order.
using TransitionRow = std::vector<TransitionEntry>;

/// Flat MDP: state rewards, per (action, state) sparse transition rows and a
/// discount factor in [0, 1). Immutable by convention once built.
struct ExplicitMdp {
    int n_states = 0;
    int n_actions = 0;
    double discount = 0.0;
    std::vector<double> rewards;      ///< indexed by state
    std::vector<TransitionRow> rows;  ///< indexed by action * n_states + state

    const TransitionRow& row(int action, int state) const {
        return rows[static_cast<std::size_t>(action) * n_states + state];
    }
    TransitionRow& row(int action, int state) {
        return rows[static_cast<std::size_t>(action) * n_states + state];
    }

    /// Empty shell with zero rewards and empty rows.
    static ExplicitMdp zeros(int n_states, int n_actions, double discount);
};

/// Deterministic stationary policy: action index per state.
using Policy = std::vector<int>;

/// Value per state.
using ValueVector = std::vector<double>;

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

/// Checks every structural invariant of an explicit MDP. Violations are
/// reported as data, one message per problem, with its (action, state)
/// location; an empty report means the model is well-formed.
ValidationReport validate_mdp(const ExplicitMdp& m);

/// Sup-norm change below which a Jacobi sweep loop stops so that the final
/// iterate is within tol of the exact fixed point: tol*(1-g)/(2g).
double residual_threshold(double tol, double discount);

/// Sweep cap; exceeding it raises an error instead of returning a bad value.
inline constexpr int kMaxSweeps = 1000000;

/// Tolerance used when comparing Q-values for greedy tie-breaking.
inline constexpr double kTieTolerance = 1e-12;

/// Row sums may deviate from 1 by at most this much.
inline constexpr double kRowSumTolerance = 1e-9;

/// Fixed-policy value function by successive approximation, starting from 0.
/// The result is within tol of the exact solution of
///   V(p) = R(p) + g * sum_q F_pq(pi(p)) V(q)
/// in sup-norm. Throws std::invalid_argument on an invalid model, policy or
/// non-positive tol.
ValueVector policy_evaluate(const ExplicitMdp& m, const Policy& policy, double tol,
                            Exec exec = Exec::Parallel);

struct VIResult {
    ValueVector values;
    Policy policy;
    int iterations = 0;
    std::vector<double> residuals;  ///< sup-norm change after each sweep
};

/// Optimal value function and a greedy policy by value iteration. Values are
/// within tol of the optimum in sup-norm; the policy is greedy with respect
/// to the final values, ties broken toward the smallest action index.
VIResult value_iterate(const ExplicitMdp& m, double tol, Exec exec = Exec::Parallel);

}  // namespace bmdp
