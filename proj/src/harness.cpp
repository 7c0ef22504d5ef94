#include "bmdp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bmdp/io.hpp"
#include "bmdp/ivi.hpp"

namespace bmdp {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

/// Quantized probability in [0, 1] on the cfg grid.
double draw_quantized01(std::mt19937_64& rng, double step) {
    const std::uint64_t levels = static_cast<std::uint64_t>(std::floor(1.0 / step + 1e-9)) + 1;
    return std::min(1.0, static_cast<double>(bounded(rng, levels)) * step);
}

template <typename DrawLeaf>
DecisionTree random_tree(std::mt19937_64& rng, std::vector<int> avail, int depth_left,
                         DrawLeaf&& draw_leaf) {
    if (depth_left <= 0 || avail.empty() || uniform01(rng) < 0.3)
        return DecisionTree::leaf(draw_leaf());
    const std::size_t pos = bounded(rng, avail.size());
    const int var = avail[pos];
    avail.erase(avail.begin() + pos);
    const DecisionTree yes = random_tree(rng, avail, depth_left - 1, draw_leaf);
    const DecisionTree no = random_tree(rng, avail, depth_left - 1, draw_leaf);
    return DecisionTree::test(var, yes, no);
}

}  // namespace

FactoredMdp generate_factored_mdp(const GeneratorConfig& cfg) {
    if (cfg.n_variables < 1 || cfg.n_variables > 32)
        throw std::invalid_argument("variable count out of range");
    if (cfg.n_actions < 1) throw std::invalid_argument("action count must be positive");
    if (cfg.max_depth < 0 || cfg.max_depth > cfg.n_variables)
        throw std::invalid_argument("tree depth out of range");
    if (!(cfg.quant_step > 0.0 && cfg.quant_step <= 1.0))
        throw std::invalid_argument("quantization step must lie in (0, 1]");
    if (!std::isfinite(cfg.reward_min) || !std::isfinite(cfg.reward_max) ||
        cfg.reward_max < cfg.reward_min)
        throw std::invalid_argument("reward range is empty or non-finite");
    if (!(cfg.discount >= 0.0 && cfg.discount < 1.0))
        throw std::invalid_argument("discount must lie in [0, 1)");

    std::mt19937_64 rng(cfg.seed);
    FactoredMdp f;
    f.discount = cfg.discount;
    for (int v = 0; v < cfg.n_variables; ++v) f.variables.push_back("x" + std::to_string(v));
    for (int a = 0; a < cfg.n_actions; ++a) f.actions.push_back("a" + std::to_string(a));

    std::vector<int> all_vars(cfg.n_variables);
    for (int v = 0; v < cfg.n_variables; ++v) all_vars[v] = v;

    f.cpts.reserve(static_cast<std::size_t>(cfg.n_variables) * cfg.n_actions);
    for (int a = 0; a < cfg.n_actions; ++a)
        for (int v = 0; v < cfg.n_variables; ++v)
            f.cpts.push_back(random_tree(rng, all_vars, cfg.max_depth, [&rng, &cfg]() {
                return draw_quantized01(rng, cfg.quant_step);
            }));
    f.reward_tree = random_tree(rng, all_vars, cfg.max_depth, [&rng, &cfg]() {
        return cfg.reward_min +
               (cfg.reward_max - cfg.reward_min) * draw_quantized01(rng, cfg.quant_step);
    });
    return f;
}

ExplicitMdp random_explicit_mdp(std::uint64_t seed, int n_states, int n_actions,
                                int max_successors, double discount, int reward_levels,
                                double duplicate_row_prob) {
    if (n_states < 1) throw std::invalid_argument("state count must be positive");
    if (n_actions < 1) throw std::invalid_argument("action count must be positive");
    if (max_successors < 1) throw std::invalid_argument("successor cap must be positive");
    if (!(discount >= 0.0 && discount < 1.0))
        throw std::invalid_argument("discount must lie in [0, 1)");
    if (reward_levels < 0) throw std::invalid_argument("reward level count must be nonnegative");
    if (!(duplicate_row_prob >= 0.0 && duplicate_row_prob <= 1.0))
        throw std::invalid_argument("duplication probability must lie in [0, 1]");

    std::mt19937_64 rng(seed);
    ExplicitMdp m = ExplicitMdp::zeros(n_states, n_actions, discount);
    for (int s = 0; s < n_states; ++s) {
        if (reward_levels > 0) {
            const std::uint64_t level = bounded(rng, reward_levels);
            m.rewards[s] = reward_levels == 1
                               ? 0.0
                               : static_cast<double>(level) / (reward_levels - 1.0);
        } else {
            m.rewards[s] = uniform01(rng);
        }
    }

    std::vector<int> pool(n_states);
    const int cap = std::min(max_successors, n_states);
    for (int a = 0; a < n_actions; ++a) {
        for (int s = 0; s < n_states; ++s) {
            const int k = 1 + static_cast<int>(bounded(rng, cap));
            for (int i = 0; i < n_states; ++i) pool[i] = i;
            for (int i = 0; i < k; ++i) {
                const std::size_t j = i + bounded(rng, n_states - i);
                std::swap(pool[i], pool[j]);
            }
            std::vector<int> to(pool.begin(), pool.begin() + k);
            std::sort(to.begin(), to.end());
            double total = 0.0;
            std::vector<double> weight(k);
            for (int i = 0; i < k; ++i) {
                weight[i] = 1e-6 + uniform01(rng);
                total += weight[i];
            }
            TransitionRow& row = m.row(a, s);
            row.reserve(k);
            for (int i = 0; i < k; ++i) row.push_back({to[i], weight[i] / total});
        }
    }

    if (duplicate_row_prob > 0.0) {
        for (int s = 1; s < n_states; ++s) {
            if (uniform01(rng) >= duplicate_row_prob) continue;
            const int t = static_cast<int>(bounded(rng, s));
            m.rewards[s] = m.rewards[t];
            for (int a = 0; a < n_actions; ++a) m.row(a, s) = m.row(a, t);
        }
    }
    return m;
}

Bmdp random_bmdp(std::uint64_t seed, int n_states, int n_actions, int max_successors,
                 double discount, double max_width) {
    if (!(max_width >= 0.0 && max_width <= 1.0))
        throw std::invalid_argument("interval width must lie in [0, 1]");
    const ExplicitMdp base =
        random_explicit_mdp(seed, n_states, n_actions, max_successors, discount);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    Bmdp b = Bmdp::zeros(n_states, n_actions, discount);
    for (int s = 0; s < n_states; ++s) {
        const double r = base.rewards[s];
        const double lo = r - max_width * uniform01(rng);
        const double hi = r + max_width * uniform01(rng);
        b.reward_bounds[s] = {lo, hi};
    }
    for (int a = 0; a < n_actions; ++a) {
        for (int s = 0; s < n_states; ++s) {
            BoundedTransitionRow& row = b.row(a, s);
            for (const TransitionEntry& e : base.row(a, s)) {
                const double lo = std::max(0.0, e.prob - max_width * uniform01(rng));
                const double hi = std::min(1.0, e.prob + max_width * uniform01(rng));
                row.push_back({e.to, {lo, hi}});
            }
        }
    }
    return b;
}

namespace {

void enumerate_assignments(int pos, int used, std::vector<int>& assign,
                           const std::function<void(const std::vector<int>&)>& visit) {
    if (pos == static_cast<int>(assign.size())) {
        visit(assign);
        return;
    }
    for (int b = 0; b <= used; ++b) {
        assign[pos] = b;
        enumerate_assignments(pos + 1, b == used ? used + 1 : used, assign, visit);
    }
}

}  // namespace

Partition coarsest_homogeneous_oracle(const ExplicitMdp& m, double epsilon) {
    if (m.n_states > 6)
        throw std::invalid_argument("too many states for partition enumeration");
    std::optional<Partition> best;
    std::vector<int> assign(m.n_states, 0);
    enumerate_assignments(0, 0, assign, [&](const std::vector<int>& blocks_of) {
        const int k = *std::max_element(blocks_of.begin(), blocks_of.end()) + 1;
        std::vector<std::vector<int>> blocks(k);
        for (int s = 0; s < m.n_states; ++s) blocks[blocks_of[s]].push_back(s);
        Partition p = Partition::from_blocks(m.n_states, std::move(blocks));
        if (!verify_homogeneous(m, p, epsilon).ok) return;
        if (!best || p.size() < best->size() ||
            (p.size() == best->size() && p.blocks < best->blocks))
            best = std::move(p);
    });
    return *best;
}

std::string SweepReport::to_csv(bool include_time) const {
    std::ostringstream out;
    out << "epsilon,blocks,max_transition_width,max_reward_width,mean_ivi_width,max_ivi_width";
    if (include_time) out << ",wall_time_s";
    out << "\n";
    for (const SweepRow& row : rows) {
        out << format_real(row.epsilon) << "," << row.blocks << ","
            << format_real(row.max_transition_width) << "," << format_real(row.max_reward_width)
            << "," << format_real(row.mean_ivi_width) << "," << format_real(row.max_ivi_width);
        if (include_time) out << "," << format_real(row.wall_time_s);
        out << "\n";
    }
    return out.str();
}

SweepReport epsilon_sweep(const FactoredMdp& f, const std::vector<double>& epsilons, double tol,
                          int region_cap) {
    for (double eps : epsilons)
        if (!(eps >= 0.0 && eps < 1.0))
            throw std::invalid_argument("epsilon must lie in [0, 1)");

    std::optional<ExplicitMdp> expansion;
    auto reduce_at = [&f, &expansion, region_cap](double eps) -> std::pair<int, Bmdp> {
        try {
            SymbolicReduceResult r = symbolic_reduce(f, eps, region_cap);
            return {static_cast<int>(r.blocks.size()), std::move(r.bmdp)};
        } catch (const SymbolicBudgetError&) {
            if (f.n_vars() > kMaxExpandVars) throw;
            if (!expansion) expansion = expand_to_explicit(f);
            ReduceResult r = reduce_model(*expansion, eps);
            Bmdp b = induce_bmdp(*expansion, r.partition);
            return {r.partition.size(), std::move(b)};
        }
    };

    const int baseline_blocks = reduce_at(0.0).first;
    SweepReport report;
    for (double eps : epsilons) {
        const auto start = std::chrono::steady_clock::now();
        auto [blocks, bmdp] = reduce_at(eps);
        if (blocks > baseline_blocks)
            throw std::logic_error("reduction produced more blocks than the exact minimal model");

        SweepRow row;
        row.epsilon = eps;
        row.blocks = blocks;
        for (const Interval& r : bmdp.reward_bounds)
            row.max_reward_width = std::max(row.max_reward_width, r.width());
        for (const BoundedTransitionRow& brow : bmdp.rows)
            for (const BoundedTransitionEntry& e : brow)
                row.max_transition_width = std::max(row.max_transition_width, e.prob.width());

        const BoundedValueResult bounds = ivi_bound_optimal(bmdp, tol);
        double total = 0.0;
        for (int j = 0; j < bmdp.n_states; ++j) {
            const double width = bounds.upper[j] - bounds.lower[j];
            total += width;
            row.max_ivi_width = std::max(row.max_ivi_width, width);
        }
        row.mean_ivi_width = total / bmdp.n_states;
        row.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.rows.push_back(row);
    }
    return report;
}

std::string SoundnessReport::summary() const {
    std::ostringstream out;
    out << "epsilon " << epsilon << ": " << blocks << " blocks, max bound width "
        << max_bound_width << ", violations: lower " << max_lower_violation << ", upper "
        << max_upper_violation << ", policy " << max_policy_violation << ", member "
        << max_member_violation;
    return out.str();
}

SoundnessReport soundness_report(const ExplicitMdp& m, double epsilon, int n_samples,
                                 std::uint64_t seed, double tol) {
    if (n_samples < 0) throw std::invalid_argument("sample count must be nonnegative");
    if (m.n_states > (1 << 16)) throw std::invalid_argument("model too large to audit");

    SoundnessReport rep;
    rep.epsilon = epsilon;
    const ReduceResult reduction = reduce_model(m, epsilon);
    const Partition& part = reduction.partition;
    rep.blocks = part.size();
    const Bmdp bmdp = induce_bmdp(m, part);
    const BoundedValueResult bounds = ivi_bound_optimal(bmdp, tol);

    double total_width = 0.0;
    for (int j = 0; j < bmdp.n_states; ++j) {
        const double width = bounds.upper[j] - bounds.lower[j];
        total_width += width;
        rep.max_bound_width = std::max(rep.max_bound_width, width);
    }
    rep.mean_bound_width = total_width / bmdp.n_states;

    const ValueVector lifted_lower = lift_block_function(part, bounds.lower);
    const ValueVector lifted_upper = lift_block_function(part, bounds.upper);
    const ValueVector optimal = value_iterate(m, tol).values;
    for (int s = 0; s < m.n_states; ++s) {
        rep.max_lower_violation = std::max(rep.max_lower_violation, lifted_lower[s] - optimal[s]);
        rep.max_upper_violation = std::max(rep.max_upper_violation, optimal[s] - lifted_upper[s]);
    }

    const Policy lifted_policy = lift_block_function(part, bounds.pessimistic_policy);
    const ValueVector policy_value = policy_evaluate(m, lifted_policy, tol);
    for (int s = 0; s < m.n_states; ++s)
        rep.max_policy_violation =
            std::max(rep.max_policy_violation, lifted_lower[s] - policy_value[s]);

    for (int i = 0; i < n_samples; ++i) {
        const ExplicitMdp member = sample_member(bmdp, seed + static_cast<std::uint64_t>(i));
        const ValueVector member_optimal = value_iterate(member, tol, Exec::Serial).values;
        for (int j = 0; j < bmdp.n_states; ++j) {
            rep.max_member_violation =
                std::max({rep.max_member_violation, bounds.lower[j] - member_optimal[j],
                          member_optimal[j] - bounds.upper[j]});
        }
    }

    rep.max_lower_violation = std::max(rep.max_lower_violation, 0.0);
    rep.max_upper_violation = std::max(rep.max_upper_violation, 0.0);
    rep.max_policy_violation = std::max(rep.max_policy_violation, 0.0);
    rep.max_member_violation = std::max(rep.max_member_violation, 0.0);
    return rep;
}

}  // namespace bmdp
