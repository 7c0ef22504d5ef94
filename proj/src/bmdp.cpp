#include "bmdp/bmdp.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace bmdp {

Bmdp Bmdp::zeros(int n_states, int n_actions, double discount) {
    Bmdp b;
    b.n_states = n_states;
    b.n_actions = n_actions;
    b.discount = discount;
    b.reward_bounds.assign(n_states > 0 ? n_states : 0, Interval{});
    if (n_states > 0 && n_actions > 0)
        b.rows.assign(static_cast<std::size_t>(n_states) * n_actions, {});
    return b;
}

namespace {

std::string loc(int action, int state) {
    std::ostringstream out;
    out << "(a" << action << ", s" << state << ")";
    return out.str();
}

}  // namespace

ValidationReport validate_bmdp(const Bmdp& b) {
    ValidationReport rep;
    auto add = [&rep](const std::string& msg) { rep.violations.push_back(msg); };

    if (b.n_states <= 0) add("state count must be positive");
    if (b.n_actions <= 0) add("action count must be positive");
    if (!(b.discount >= 0.0 && b.discount < 1.0)) {
        std::ostringstream out;
        out << "discount " << b.discount << " not in [0, 1)";
        add(out.str());
    }
    if (b.n_states <= 0 || b.n_actions <= 0) return rep;

    if (static_cast<int>(b.reward_bounds.size()) != b.n_states) {
        add("reward bound count does not match state count");
    } else {
        for (int s = 0; s < b.n_states; ++s) {
            const Interval& r = b.reward_bounds[s];
            if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) {
                std::ostringstream out;
                out << "non-finite reward bound at s" << s;
                add(out.str());
            } else if (r.lo > r.hi) {
                std::ostringstream out;
                out << "reward bound lo " << r.lo << " above hi " << r.hi << " at s" << s;
                add(out.str());
            }
        }
    }

    if (b.rows.size() != static_cast<std::size_t>(b.n_states) * b.n_actions) {
        add("transition row count does not match states * actions");
        return rep;
    }

    for (int a = 0; a < b.n_actions; ++a) {
        for (int s = 0; s < b.n_states; ++s) {
            const BoundedTransitionRow& row = b.row(a, s);
            double sum_lo = 0.0, sum_hi = 0.0;
            int prev = -1;
            bool indexable = true;
            for (const BoundedTransitionEntry& e : row) {
                if (e.to < 0 || e.to >= b.n_states) {
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
                if (e.prob.lo > e.prob.hi) {
                    std::ostringstream out;
                    out << "interval lo " << e.prob.lo << " above hi " << e.prob.hi << " at "
                        << loc(a, s) << " to " << e.to;
                    add(out.str());
                }
                if (!(e.prob.lo >= 0.0) || !(e.prob.hi <= 1.0)) {
                    std::ostringstream out;
                    out << "probability bounds [" << e.prob.lo << ", " << e.prob.hi
                        << "] out of range at " << loc(a, s) << " to " << e.to;
                    add(out.str());
                }
                sum_lo += e.prob.lo;
                sum_hi += e.prob.hi;
                prev = std::max(prev, e.to);
            }
            if (!indexable) continue;
            if (sum_lo > 1.0 + kRowSumTolerance) {
                std::ostringstream out;
                out << "row lower bounds sum to " << sum_lo << " at " << loc(a, s);
                add(out.str());
            }
            if (sum_hi < 1.0 - kRowSumTolerance) {
                std::ostringstream out;
                out << "row upper bounds sum to " << sum_hi << " at " << loc(a, s);
                add(out.str());
            }
        }
    }
    return rep;
}

namespace {

void require_valid(const Bmdp& b) {
    ValidationReport rep = validate_bmdp(b);
    if (!rep.ok()) throw std::invalid_argument("invalid bmdp: " + rep.violations.front());
}

void require_valid(const ExplicitMdp& m) {
    ValidationReport rep = validate_mdp(m);
    if (!rep.ok()) throw std::invalid_argument("invalid mdp: " + rep.violations.front());
}

/// Uniform double in [0, 1) built from the top 53 bits of the generator, so
/// the stream does not depend on library distribution internals.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

Bmdp point_bmdp(const ExplicitMdp& m) {
    require_valid(m);
    Bmdp b = Bmdp::zeros(m.n_states, m.n_actions, m.discount);
    for (int s = 0; s < m.n_states; ++s) b.reward_bounds[s] = {m.rewards[s], m.rewards[s]};
    for (int a = 0; a < m.n_actions; ++a)
        for (int s = 0; s < m.n_states; ++s) {
            BoundedTransitionRow& row = b.row(a, s);
            row.reserve(m.row(a, s).size());
            for (const TransitionEntry& e : m.row(a, s))
                row.push_back({e.to, {e.prob, e.prob}});
        }
    return b;
}

bool contains_member(const Bmdp& b, const ExplicitMdp& m) {
    require_valid(b);
    require_valid(m);
    if (b.n_states != m.n_states || b.n_actions != m.n_actions)
        throw std::invalid_argument("bmdp and mdp shapes do not match");
    if (std::abs(b.discount - m.discount) > kMembershipTolerance)
        throw std::invalid_argument("bmdp and mdp discounts do not match");

    for (int s = 0; s < m.n_states; ++s) {
        const Interval& r = b.reward_bounds[s];
        if (m.rewards[s] < r.lo - kMembershipTolerance ||
            m.rewards[s] > r.hi + kMembershipTolerance)
            return false;
    }
    for (int a = 0; a < m.n_actions; ++a) {
        for (int s = 0; s < m.n_states; ++s) {
            const BoundedTransitionRow& brow = b.row(a, s);
            const TransitionRow& mrow = m.row(a, s);
            // Merge walk over two ascending rows; a to-state missing on either
            // side carries probability 0 or the interval [0, 0].
            std::size_t i = 0, j = 0;
            while (i < brow.size() || j < mrow.size()) {
                int bto = i < brow.size() ? brow[i].to : m.n_states;
                int mto = j < mrow.size() ? mrow[j].to : m.n_states;
                double p = 0.0;
                Interval bounds{0.0, 0.0};
                if (bto <= mto) bounds = brow[i++].prob;
                if (mto <= bto) p = mrow[j++].prob;
                if (p < bounds.lo - kMembershipTolerance || p > bounds.hi + kMembershipTolerance)
                    return false;
            }
        }
    }
    return true;
}

ExplicitMdp sample_member(const Bmdp& b, std::uint64_t seed) {
    require_valid(b);
    std::mt19937_64 rng(seed);
    ExplicitMdp m = ExplicitMdp::zeros(b.n_states, b.n_actions, b.discount);
    for (int s = 0; s < b.n_states; ++s)
        m.rewards[s] = 0.5 * (b.reward_bounds[s].lo + b.reward_bounds[s].hi);

    std::vector<double> x;
    for (int a = 0; a < b.n_actions; ++a) {
        for (int s = 0; s < b.n_states; ++s) {
            const BoundedTransitionRow& brow = b.row(a, s);
            x.resize(brow.size());
            double sum = 0.0, sum_lo = 0.0, sum_hi = 0.0;
            for (std::size_t i = 0; i < brow.size(); ++i) {
                const Interval& p = brow[i].prob;
                x[i] = p.lo + (p.hi - p.lo) * uniform01(rng);
                sum += x[i];
                sum_lo += p.lo;
                sum_hi += p.hi;
            }
            // Proportional repair toward the violated side; the scaling keeps
            // every entry inside its interval and lands the sum exactly on 1.
            if (sum > 1.0 && sum - sum_lo > 0.0) {
                const double c = (1.0 - sum_lo) / (sum - sum_lo);
                for (std::size_t i = 0; i < brow.size(); ++i)
                    x[i] = brow[i].prob.lo + c * (x[i] - brow[i].prob.lo);
            } else if (sum < 1.0 && sum_hi - sum > 0.0) {
                const double c = (sum_hi - 1.0) / (sum_hi - sum);
                for (std::size_t i = 0; i < brow.size(); ++i)
                    x[i] = brow[i].prob.hi - c * (brow[i].prob.hi - x[i]);
            }
            TransitionRow& mrow = m.row(a, s);
            mrow.reserve(brow.size());
            for (std::size_t i = 0; i < brow.size(); ++i) mrow.push_back({brow[i].to, x[i]});
        }
    }
    return m;
}

}  // namespace bmdp
