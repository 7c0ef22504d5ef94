#include "bmdp/ivi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace bmdp {

namespace {

void require_valid(const Bmdp& b) {
    ValidationReport rep = validate_bmdp(b);
    if (!rep.ok()) throw std::invalid_argument("invalid bmdp: " + rep.violations.front());
}

void require_policy(const Bmdp& b, const Policy& policy) {
    if (static_cast<int>(policy.size()) != b.n_states)
        throw std::invalid_argument("policy size does not match state count");
    for (int a : policy)
        if (a < 0 || a >= b.n_actions) throw std::invalid_argument("policy action out of range");
}

void require_tol(double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
}

/// Per-thread workspace so the sweep loops do not allocate per row.
struct ExtremeScratch {
    std::vector<int> order;
};

/// Objective of the extreme distribution without materializing it. When
/// `probs` is non-null it receives the distribution itself.
double extreme_row_value(const BoundedTransitionRow& row, const ValueVector& values,
                         OptMode mode, ExtremeScratch& scratch,
                         std::vector<double>* probs = nullptr) {
    const std::size_t k = row.size();
    double sum_lo = 0.0;
    double value = 0.0;
    for (const BoundedTransitionEntry& e : row) {
        sum_lo += e.prob.lo;
        value += e.prob.lo * values[e.to];
    }
    double budget = 1.0 - sum_lo;
    if (budget < -kRowSumTolerance)
        throw std::invalid_argument("interval row lower bounds sum above 1");
    budget = std::max(budget, 0.0);

    scratch.order.resize(k);
    std::iota(scratch.order.begin(), scratch.order.end(), 0);
    if (mode == OptMode::Minimize) {
        std::sort(scratch.order.begin(), scratch.order.end(), [&](int i, int j) {
            const double vi = values[row[i].to], vj = values[row[j].to];
            if (vi != vj) return vi < vj;
            return row[i].to < row[j].to;
        });
    } else {
        std::sort(scratch.order.begin(), scratch.order.end(), [&](int i, int j) {
            const double vi = values[row[i].to], vj = values[row[j].to];
            if (vi != vj) return vi > vj;
            return row[i].to < row[j].to;
        });
    }

    if (probs != nullptr) {
        probs->resize(k);
        for (std::size_t i = 0; i < k; ++i) (*probs)[i] = row[i].prob.lo;
    }
    for (int idx : scratch.order) {
        if (budget <= 0.0) break;
        const double add = std::min(row[idx].prob.hi - row[idx].prob.lo, budget);
        value += add * values[row[idx].to];
        if (probs != nullptr) (*probs)[idx] += add;
        budget -= add;
    }
    if (budget > kRowSumTolerance)
        throw std::invalid_argument("interval row upper bounds sum below 1");
    return value;
}

/// Jacobi sweep loop mirroring the one in mdp.cpp, with a per-thread scratch
/// threaded through so extreme rows never allocate inside the parallel loop.
template <typename Update>
int jacobi_iterate_ivi(int n, double threshold, Exec exec, ValueVector& value, Update&& update) {
    ValueVector next(n, 0.0);
    std::vector<double> change(n, 0.0);
    for (int sweep = 1; sweep <= kMaxSweeps; ++sweep) {
        if (exec == Exec::Parallel) {
#pragma omp parallel
            {
                ExtremeScratch scratch;
#pragma omp for schedule(static)
                for (int s = 0; s < n; ++s) {
                    next[s] = update(s, value, scratch);
                    change[s] = std::abs(next[s] - value[s]);
                }
            }
        } else {
            ExtremeScratch scratch;
            for (int s = 0; s < n; ++s) {
                next[s] = update(s, value, scratch);
                change[s] = std::abs(next[s] - value[s]);
            }
        }
        const double residual = *std::max_element(change.begin(), change.end());
        value.swap(next);
        if (residual <= threshold) return sweep;
    }
    throw std::runtime_error("interval value iteration did not converge within the sweep cap");
}

/// One bound of the family. Lower bounds pair R_lo with minimizing nature,
/// upper bounds R_hi with maximizing nature. `policy` pins the action when
/// non-null, otherwise the update maximizes over actions.
int ivi_fixed_point(const Bmdp& b, OptMode mode, const Policy* policy, double tol, Exec exec,
                    ValueVector& value) {
    const double threshold = residual_threshold(tol, b.discount);
    value.assign(b.n_states, 0.0);
    return jacobi_iterate_ivi(
        b.n_states, threshold, exec, value,
        [&](int s, const ValueVector& v, ExtremeScratch& scratch) {
            const double reward =
                mode == OptMode::Minimize ? b.reward_bounds[s].lo : b.reward_bounds[s].hi;
            if (policy != nullptr)
                return reward +
                       b.discount * extreme_row_value(b.row((*policy)[s], s), v, mode, scratch);
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < b.n_actions; ++a) {
                const double q =
                    reward + b.discount * extreme_row_value(b.row(a, s), v, mode, scratch);
                best = std::max(best, q);
            }
            return best;
        });
}

}  // namespace

std::vector<double> extreme_transition_vector(const BoundedTransitionRow& row,
                                              const ValueVector& values, OptMode mode) {
    for (const BoundedTransitionEntry& e : row)
        if (e.to < 0 || e.to >= static_cast<int>(values.size()))
            throw std::invalid_argument("row to-state outside the value vector");
    ExtremeScratch scratch;
    std::vector<double> probs;
    extreme_row_value(row, values, mode, scratch, &probs);
    return probs;
}

BoundedValueResult ivi_bound_optimal(const Bmdp& b, double tol, Exec exec) {
    require_valid(b);
    require_tol(tol);
    BoundedValueResult result;
    result.iterations_lower =
        ivi_fixed_point(b, OptMode::Minimize, nullptr, tol, exec, result.lower);
    result.iterations_upper =
        ivi_fixed_point(b, OptMode::Maximize, nullptr, tol, exec, result.upper);
    result.pessimistic_policy = extract_pessimistic_policy(b, result.lower);
    return result;
}

ValueBounds ivi_bound_policy(const Bmdp& b, const Policy& policy, double tol, Exec exec) {
    require_valid(b);
    require_policy(b, policy);
    require_tol(tol);
    ValueBounds result;
    result.iterations_lower =
        ivi_fixed_point(b, OptMode::Minimize, &policy, tol, exec, result.lower);
    result.iterations_upper =
        ivi_fixed_point(b, OptMode::Maximize, &policy, tol, exec, result.upper);
    return result;
}

Policy extract_pessimistic_policy(const Bmdp& b, const ValueVector& lower) {
    require_valid(b);
    if (static_cast<int>(lower.size()) != b.n_states)
        throw std::invalid_argument("value vector size does not match state count");
    Policy policy(b.n_states, 0);
    ExtremeScratch scratch;
    std::vector<double> q(b.n_actions, 0.0);
    for (int s = 0; s < b.n_states; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < b.n_actions; ++a) {
            q[a] = b.reward_bounds[s].lo +
                   b.discount * extreme_row_value(b.row(a, s), lower, OptMode::Minimize, scratch);
            best = std::max(best, q[a]);
        }
        for (int a = 0; a < b.n_actions; ++a)
            if (q[a] >= best - kTieTolerance) {
                policy[s] = a;
                break;
            }
    }
    return policy;
}

ExplicitMdp materialize_extreme_mdp(const Bmdp& b, const ValueVector& values, OptMode mode) {
    require_valid(b);
    if (static_cast<int>(values.size()) != b.n_states)
        throw std::invalid_argument("value vector size does not match state count");
    ExplicitMdp m = ExplicitMdp::zeros(b.n_states, b.n_actions, b.discount);
    for (int s = 0; s < b.n_states; ++s)
        m.rewards[s] = mode == OptMode::Minimize ? b.reward_bounds[s].lo : b.reward_bounds[s].hi;
    for (int a = 0; a < b.n_actions; ++a) {
        for (int s = 0; s < b.n_states; ++s) {
            const BoundedTransitionRow& brow = b.row(a, s);
            const std::vector<double> probs = extreme_transition_vector(brow, values, mode);
            TransitionRow& mrow = m.row(a, s);
            mrow.reserve(brow.size());
            for (std::size_t i = 0; i < brow.size(); ++i)
                mrow.push_back({brow[i].to, probs[i]});
        }
    }
    return m;
}

}  // namespace bmdp
