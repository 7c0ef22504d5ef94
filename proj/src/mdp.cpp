#include "bmdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bmdp {

ExplicitMdp ExplicitMdp::zeros(int n_states, int n_actions, double discount) {
    ExplicitMdp m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.discount = discount;
    m.rewards.assign(n_states > 0 ? n_states : 0, 0.0);
    if (n_states > 0 && n_actions > 0)
        m.rows.assign(static_cast<std::size_t>(n_states) * n_actions, {});
    return m;
}

std::string ValidationReport::to_string() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i > 0) out << '\n';
        out << violations[i];
    }
    return out.str();
}

namespace {

std::string loc(int action, int state) {
    std::ostringstream out;
    out << "(a" << action << ", s" << state << ")";
    return out.str();
}

}  // namespace

ValidationReport validate_mdp(const ExplicitMdp& m) {
    ValidationReport rep;
    auto add = [&rep](const std::string& msg) { rep.violations.push_back(msg); };

    if (m.n_states <= 0) add("state count must be positive");
    if (m.n_actions <= 0) add("action count must be positive");
    if (!(m.discount >= 0.0 && m.discount < 1.0)) {
        std::ostringstream out;
        out << "discount " << m.discount << " not in [0, 1)";
        add(out.str());
    }
    if (m.n_states <= 0 || m.n_actions <= 0) return rep;

    if (static_cast<int>(m.rewards.size()) != m.n_states) {
        add("reward vector size does not match state count");
    } else {
        for (int s = 0; s < m.n_states; ++s)
            if (!std::isfinite(m.rewards[s])) {
                std::ostringstream out;
                out << "non-finite reward at s" << s;
                add(out.str());
            }
    }

    if (m.rows.size() != static_cast<std::size_t>(m.n_states) * m.n_actions) {
        add("transition row count does not match states * actions");
        return rep;
    }

    for (int a = 0; a < m.n_actions; ++a) {
        for (int s = 0; s < m.n_states; ++s) {
            const TransitionRow& row = m.row(a, s);
            double sum = 0.0;
            int prev = -1;
            bool indexable = true;
            for (const TransitionEntry& e : row) {
                if (e.to < 0 || e.to >= m.n_states) {
                    std::ostringstream out;
                    out << "to-state " << e.to << " out of range at " << loc(a, s);
                    add(out.str());
                    indexable = false;
                } else if (e.to == prev) {
                    std::ostringstream out;
                    out << "duplicate to-state " << e.to << " at " << loc(a, s);
                    add(out.str());
                } else if (e.to < prev) {
                    std::ostringstream out;
                    out << "row entries out of order at " << loc(a, s);
                    add(out.str());
                }
                if (!(e.prob >= 0.0 && e.prob <= 1.0)) {
                    std::ostringstream out;
                    out << "probability " << e.prob << " out of range at " << loc(a, s);
                    add(out.str());
                }
                sum += e.prob;
                prev = std::max(prev, e.to);
            }
            if (indexable && std::abs(sum - 1.0) > kRowSumTolerance) {
                std::ostringstream out;
                out << "row sum " << sum << " at " << loc(a, s);
                add(out.str());
            }
        }
    }
    return rep;
}

double residual_threshold(double tol, double discount) {
    if (discount <= 0.0) return std::numeric_limits<double>::infinity();
    return tol * (1.0 - discount) / (2.0 * discount);
}

namespace {

void require_valid(const ExplicitMdp& m) {
    ValidationReport rep = validate_mdp(m);
    if (!rep.ok()) throw std::invalid_argument("invalid mdp: " + rep.violations.front());
}

void require_policy(const ExplicitMdp& m, const Policy& policy) {
    if (static_cast<int>(policy.size()) != m.n_states)
        throw std::invalid_argument("policy size does not match state count");
    for (int a : policy)
        if (a < 0 || a >= m.n_actions) throw std::invalid_argument("policy action out of range");
}

void require_tol(double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
}

double row_dot(const TransitionRow& row, const ValueVector& v) {
    double acc = 0.0;
    for (const TransitionEntry& e : row) acc += e.prob * v[e.to];
    return acc;
}

double bellman_best(const ExplicitMdp& m, int s, const ValueVector& v) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < m.n_actions; ++a) {
        const double q = m.rewards[s] + m.discount * row_dot(m.row(a, s), v);
        best = std::max(best, q);
    }
    return best;
}

/// Runs synchronized Jacobi sweeps of `update` over `value` until the
/// sup-norm change drops to `threshold`. Returns the number of sweeps.
template <typename Update>
int jacobi_iterate(int n, double threshold, Exec exec, ValueVector& value,
                   std::vector<double>* residual_history, Update&& update) {
    ValueVector next(n, 0.0);
    std::vector<double> change(n, 0.0);
    for (int sweep = 1; sweep <= kMaxSweeps; ++sweep) {
        if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
            for (int s = 0; s < n; ++s) {
                next[s] = update(s, value);
                change[s] = std::abs(next[s] - value[s]);
            }
        } else {
            for (int s = 0; s < n; ++s) {
                next[s] = update(s, value);
                change[s] = std::abs(next[s] - value[s]);
            }
        }
        const double residual = *std::max_element(change.begin(), change.end());
        if (residual_history != nullptr) residual_history->push_back(residual);
        value.swap(next);
        if (residual <= threshold) return sweep;
    }
    throw std::runtime_error("value iteration did not converge within the sweep cap");
}

Policy greedy_policy(const ExplicitMdp& m, const ValueVector& v) {
    Policy policy(m.n_states, 0);
    for (int s = 0; s < m.n_states; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < m.n_actions; ++a)
            best = std::max(best, m.rewards[s] + m.discount * row_dot(m.row(a, s), v));
        for (int a = 0; a < m.n_actions; ++a) {
            const double q = m.rewards[s] + m.discount * row_dot(m.row(a, s), v);
            if (q >= best - kTieTolerance) {
                policy[s] = a;
                break;
            }
        }
    }
    return policy;
}

}  // namespace

ValueVector policy_evaluate(const ExplicitMdp& m, const Policy& policy, double tol, Exec exec) {
    require_valid(m);
    require_policy(m, policy);
    require_tol(tol);
    ValueVector value(m.n_states, 0.0);
    jacobi_iterate(m.n_states, residual_threshold(tol, m.discount), exec, value, nullptr,
                   [&](int s, const ValueVector& v) {
                       return m.rewards[s] + m.discount * row_dot(m.row(policy[s], s), v);
                   });
    return value;
}

VIResult value_iterate(const ExplicitMdp& m, double tol, Exec exec) {
    require_valid(m);
    require_tol(tol);
    VIResult result;
    result.values.assign(m.n_states, 0.0);
    result.iterations =
        jacobi_iterate(m.n_states, residual_threshold(tol, m.discount), exec, result.values,
                       &result.residuals,
                       [&](int s, const ValueVector& v) { return bellman_best(m, s, v); });
    result.policy = greedy_policy(m, result.values);
    return result;
}

}  // namespace bmdp
