#pragma once

#include <cstdint>
#include <string>

#include "bmdp/bmdp.hpp"
#include "bmdp/factored.hpp"
#include "bmdp/mdp.hpp"
#include "bmdp/reduce.hpp"

namespace bmdp {

/// Knobs for the random factored-model generator. Leaf probabilities and
/// rewards are quantized so that states collide behaviorally and reductions
/// have something to merge.
struct GeneratorConfig {
    std::uint64_t seed = 0;
    int n_variables = 4;
    int n_actions = 2;
    int max_depth = 2;        ///< CPT and reward tree depth cap
    double quant_step = 0.05; ///< probability and reward grid step, in (0, 1]
    double reward_min = 0.0;
    double reward_max = 1.0;
    double discount = 0.9;
};

/// Random factored MDP, deterministic in the seed: same config, same model,
/// byte-identical under serialization. Throws std::invalid_argument on an
/// inconsistent config.
FactoredMdp generate_factored_mdp(const GeneratorConfig& cfg);

/// Random explicit MDP with up to max_successors successors per row.
/// reward_levels > 0 draws rewards from that many grid levels instead of a
/// continuum; duplicate_row_prob copies rewards and all rows from an earlier
/// state with that probability, planting behaviorally identical state pairs.
ExplicitMdp random_explicit_mdp(std::uint64_t seed, int n_states, int n_actions,
                                int max_successors, double discount, int reward_levels = 0,
                                double duplicate_row_prob = 0.0);

/// Random BMDP built by widening the intervals of a random explicit MDP by
/// up to max_width on each side (clipped to [0, 1]), so the base model is a
/// member of the family by construction.
Bmdp random_bmdp(std::uint64_t seed, int n_states, int n_actions, int max_successors,
                 double discount, double max_width);

/// Exact coarsest epsilon-homogeneous partition by enumerating every
/// partition of the state set and keeping the homogeneous one with the
/// fewest blocks (ties to the lexicographically smallest canonical form).
/// Restricted to n_states <= 6.
Partition coarsest_homogeneous_oracle(const ExplicitMdp& m, double epsilon);

struct SweepRow {
    double epsilon = 0.0;
    int blocks = 0;
    double max_transition_width = 0.0;
    double max_reward_width = 0.0;
    double mean_ivi_width = 0.0;
    double max_ivi_width = 0.0;
    double wall_time_s = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;

    /// CSV with a header row; wall time is appended only on request since it
    /// is the one non-reproducible column.
    std::string to_csv(bool include_time = false) const;
};

/// Reduces the model at each epsilon, induces the BMDP and measures interval
/// and value-bound widths. Uses the symbolic reducer, falling back to
/// explicit reduction over the expansion when the region cap is exceeded.
SweepReport epsilon_sweep(const FactoredMdp& f, const std::vector<double>& epsilons,
                          double tol = 1e-6, int region_cap = kDefaultRegionCap);

/// End-to-end soundness audit of the reduction pipeline on one model.
struct SoundnessReport {
    double epsilon = 0.0;
    int blocks = 0;
    double max_lower_violation = 0.0;   ///< lifted lower bound above optimum
    double max_upper_violation = 0.0;   ///< optimum above lifted upper bound
    double max_policy_violation = 0.0;  ///< lifted lower above lifted policy value
    double max_member_violation = 0.0;  ///< sampled member value outside bounds
    double max_bound_width = 0.0;
    double mean_bound_width = 0.0;

    bool ok(double tol) const {
        return max_lower_violation <= tol && max_upper_violation <= tol &&
               max_policy_violation <= tol && max_member_violation <= tol;
    }
    std::string summary() const;
};

/// Reduces m at epsilon, bounds values on the induced BMDP, lifts them and
/// checks: the lifted interval brackets the optimum, the lifted pessimistic
/// policy achieves its lower bound, and n_samples sampled members of the
/// BMDP have optima inside the bounds.
SoundnessReport soundness_report(const ExplicitMdp& m, double epsilon, int n_samples,
                                 std::uint64_t seed, double tol = 1e-8);

}  // namespace bmdp
