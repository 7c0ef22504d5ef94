#pragma once

#include <cstdint>

#include "bmdp/mdp.hpp"

namespace bmdp {

/// Closed real interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

struct BoundedTransitionEntry {
    int to = 0;
    Interval prob;
};

/// Sparse interval transition row in ascending to-state order. To-states not
/// listed carry the implicit interval [0, 0].
using BoundedTransitionRow = std::vector<BoundedTransitionEntry>;

/// Bounded-parameter MDP: interval rewards per state and interval transition
/// probabilities per (action, state) row. A row is well-formed when its lower
/// bounds sum to at most 1 and its upper bounds to at least 1, so that some
/// exact distribution fits inside every row box.
struct Bmdp {
    int n_states = 0;
    int n_actions = 0;
    double discount = 0.0;
    std::vector<Interval> reward_bounds;     ///< indexed by state
    std::vector<BoundedTransitionRow> rows;  ///< indexed by action * n_states + state

    const BoundedTransitionRow& row(int action, int state) const {
        return rows[static_cast<std::size_t>(action) * n_states + state];
    }
    BoundedTransitionRow& row(int action, int state) {
        return rows[static_cast<std::size_t>(action) * n_states + state];
    }

    static Bmdp zeros(int n_states, int n_actions, double discount);
};

/// Slack allowed when testing point membership against interval bounds.
inline constexpr double kMembershipTolerance = 1e-12;

ValidationReport validate_bmdp(const Bmdp& b);

/// Degenerate BMDP whose intervals all have zero width, pinned at m exactly.
Bmdp point_bmdp(const ExplicitMdp& m);

/// True when m lies inside b's interval family: same shape and discount, and
/// every probability and reward within its bounds to kMembershipTolerance.
/// Throws std::invalid_argument when the shapes are not comparable.
bool contains_member(const Bmdp& b, const ExplicitMdp& m);

/// Draws one member MDP of b's family, deterministically from the seed.
/// Probabilities are drawn uniformly inside their intervals and repaired to
/// row sum 1 by moving every entry proportionally toward its violated side;
/// rewards take interval midpoints.
ExplicitMdp sample_member(const Bmdp& b, std::uint64_t seed);

}  // namespace bmdp
