#include "bmdp/factored.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace bmdp {

DecisionTree DecisionTree::leaf(double value) {
    DecisionTree t;
    t.nodes_.push_back({-1, value, -1, -1});
    t.root_ = 0;
    return t;
}

DecisionTree DecisionTree::test(int var, const DecisionTree& if_true,
                                const DecisionTree& if_false) {
    DecisionTree t;
    t.nodes_ = if_true.nodes_;
    const int offset = static_cast<int>(t.nodes_.size());
    for (Node node : if_false.nodes_) {
        if (node.var >= 0) {
            node.yes += offset;
            node.no += offset;
        }
        t.nodes_.push_back(node);
    }
    t.nodes_.push_back({var, 0.0, if_true.root_, if_false.root_ + offset});
    t.root_ = static_cast<int>(t.nodes_.size()) - 1;
    return t;
}

double DecisionTree::evaluate(std::uint32_t state_bits) const {
    if (root_ < 0) throw std::logic_error("evaluate on an empty tree");
    int at = root_;
    while (nodes_[at].var >= 0)
        at = ((state_bits >> nodes_[at].var) & 1u) ? nodes_[at].yes : nodes_[at].no;
    return nodes_[at].value;
}

namespace {

void walk_paths(const std::vector<DecisionTree::Node>& nodes, int at, Term& prefix,
                std::vector<DecisionTree::PathLeaf>& out) {
    const DecisionTree::Node& node = nodes[at];
    if (node.var < 0) {
        Term condition = prefix;
        std::sort(condition.begin(), condition.end(), literal_less);
        out.push_back({std::move(condition), node.value});
        return;
    }
    prefix.push_back({node.var, true});
    walk_paths(nodes, node.yes, prefix, out);
    prefix.back().positive = false;
    walk_paths(nodes, node.no, prefix, out);
    prefix.pop_back();
}

}  // namespace

std::vector<DecisionTree::PathLeaf> DecisionTree::paths() const {
    std::vector<PathLeaf> out;
    if (root_ < 0) return out;
    Term prefix;
    walk_paths(nodes_, root_, prefix, out);
    return out;
}

namespace {

void check_tree(const DecisionTree& tree, const std::string& label, int n_vars, bool leaf_is_prob,
                ValidationReport& rep) {
    const std::vector<DecisionTree::Node>& nodes = tree.nodes();
    if (tree.root() < 0 || tree.root() >= static_cast<int>(nodes.size())) {
        rep.violations.push_back(label + ": missing tree");
        return;
    }
    std::vector<std::pair<int, std::uint32_t>> stack{{tree.root(), 0u}};
    std::size_t visited = 0;
    while (!stack.empty()) {
        const auto [at, path_mask] = stack.back();
        stack.pop_back();
        if (at < 0 || at >= static_cast<int>(nodes.size())) {
            rep.violations.push_back(label + ": child index out of range");
            continue;
        }
        if (++visited > (1u << 20)) {
            rep.violations.push_back(label + ": tree too large to validate");
            return;
        }
        const DecisionTree::Node& node = nodes[at];
        if (node.var < 0) {
            if (!std::isfinite(node.value)) {
                rep.violations.push_back(label + ": non-finite leaf value");
            } else if (leaf_is_prob && !(node.value >= 0.0 && node.value <= 1.0)) {
                std::ostringstream out;
                out << label << ": leaf value " << node.value << " out of [0, 1]";
                rep.violations.push_back(out.str());
            }
            continue;
        }
        if (node.var >= n_vars) {
            rep.violations.push_back(label + ": tests an unknown fluent");
            continue;
        }
        if ((path_mask >> node.var) & 1u) {
            rep.violations.push_back(label + ": fluent repeats on a path");
            continue;
        }
        const std::uint32_t mask = path_mask | (1u << node.var);
        stack.push_back({node.yes, mask});
        stack.push_back({node.no, mask});
    }
}

void require_valid(const FactoredMdp& f) {
    ValidationReport rep = validate_factored(f);
    if (!rep.ok()) throw std::invalid_argument("invalid factored mdp: " + rep.violations.front());
}

}  // namespace

ValidationReport validate_factored(const FactoredMdp& f) {
    ValidationReport rep;
    auto add = [&rep](const std::string& msg) { rep.violations.push_back(msg); };

    if (f.variables.empty()) add("fluent list must not be empty");
    if (f.variables.size() > 32) add("more than 32 fluents cannot be bit-encoded");
    if (f.actions.empty()) add("action list must not be empty");
    for (std::size_t i = 0; i < f.variables.size(); ++i)
        for (std::size_t j = i + 1; j < f.variables.size(); ++j)
            if (f.variables[i] == f.variables[j]) add("duplicate fluent name " + f.variables[i]);
    for (std::size_t i = 0; i < f.actions.size(); ++i)
        for (std::size_t j = i + 1; j < f.actions.size(); ++j)
            if (f.actions[i] == f.actions[j]) add("duplicate action name " + f.actions[i]);
    if (!(f.discount >= 0.0 && f.discount < 1.0)) {
        std::ostringstream out;
        out << "discount " << f.discount << " not in [0, 1)";
        add(out.str());
    }
    if (!rep.ok()) return rep;

    if (f.cpts.size() != f.variables.size() * f.actions.size()) {
        add("cpt count does not match fluents * actions");
        return rep;
    }
    for (int a = 0; a < f.n_actions(); ++a)
        for (int v = 0; v < f.n_vars(); ++v) {
            std::ostringstream label;
            label << "cpt (" << f.actions[a] << ", " << f.variables[v] << ")";
            check_tree(f.cpt(a, v), label.str(), f.n_vars(), true, rep);
        }
    check_tree(f.reward_tree, "reward tree", f.n_vars(), false, rep);
    return rep;
}

ExplicitMdp expand_to_explicit(const FactoredMdp& f) {
    require_valid(f);
    const int nv = f.n_vars();
    if (nv > kMaxExpandVars) throw std::invalid_argument("too many fluents to expand");
    const int n = 1 << nv;
    ExplicitMdp m = ExplicitMdp::zeros(n, f.n_actions(), f.discount);
    for (int p = 0; p < n; ++p) m.rewards[p] = f.reward_tree.evaluate(p);

    for (int a = 0; a < f.n_actions(); ++a) {
#pragma omp parallel
        {
            std::vector<double> cur(n), nxt(n);
            std::vector<double> leaf(nv);
#pragma omp for schedule(static)
            for (int p = 0; p < n; ++p) {
                for (int i = 0; i < nv; ++i) leaf[i] = f.cpt(a, i).evaluate(p);
                // Product distribution over next states by doubling: after
                // step i, cur[q] covers assignments of fluents 0..i packed in
                // the low bits of q.
                cur[0] = 1.0;
                int size = 1;
                for (int i = 0; i < nv; ++i) {
                    for (int q = 0; q < size; ++q) {
                        nxt[q] = cur[q] * (1.0 - leaf[i]);
                        nxt[q + size] = cur[q] * leaf[i];
                    }
                    size <<= 1;
                    cur.swap(nxt);
                }
                TransitionRow& row = m.row(a, p);
                for (int q = 0; q < n; ++q)
                    if (cur[q] != 0.0) row.push_back({q, cur[q]});
            }
        }
    }
    return m;
}

double block_prob_factored(const FactoredMdp& f, std::uint32_t state_bits, int action,
                           const BlockFormula& phi) {
    if (action < 0 || action >= f.n_actions()) throw std::invalid_argument("action out of range");
    const std::vector<int> vars = formula_vars(phi);
    for (int v : vars)
        if (v < 0 || v >= f.n_vars())
            throw std::invalid_argument("formula mentions an unknown fluent");
    const int k = static_cast<int>(vars.size());
    if (k > 30) throw std::invalid_argument("formula mentions too many fluents to enumerate");

    std::vector<double> leaf(k);
    for (int j = 0; j < k; ++j) leaf[j] = f.cpt(action, vars[j]).evaluate(state_bits);

    KahanSum total;
    for (std::uint32_t w = 0; w < (1u << k); ++w) {
        std::uint32_t bits = 0;
        double pr = 1.0;
        for (int j = 0; j < k; ++j) {
            if ((w >> j) & 1u) {
                bits |= 1u << vars[j];
                pr *= leaf[j];
            } else {
                pr *= 1.0 - leaf[j];
            }
        }
        if (evaluate_formula(phi, bits)) total.add(pr);
    }
    return total.value();
}

std::vector<Term> region_partition(const FactoredMdp& f, const BlockFormula& phi, int region_cap) {
    require_valid(f);
    if (region_cap < 1) throw std::invalid_argument("region cap must be positive");
    const std::vector<int> vars = formula_vars(phi);
    for (int v : vars)
        if (v < 0 || v >= f.n_vars())
            throw std::invalid_argument("formula mentions an unknown fluent");

    std::vector<Term> regions{Term{}};
    Term merged;
    for (int a = 0; a < f.n_actions(); ++a) {
        for (int v : vars) {
            const std::vector<DecisionTree::PathLeaf> paths = f.cpt(a, v).paths();
            std::vector<Term> next;
            next.reserve(regions.size());
            for (const Term& region : regions)
                for (const DecisionTree::PathLeaf& path : paths)
                    if (term_conjoin(region, path.condition, merged)) next.push_back(merged);
            if (static_cast<int>(next.size()) > region_cap) {
                std::ostringstream out;
                out << "symbolic budget exceeded: " << next.size() << " regions over cap "
                    << region_cap;
                throw SymbolicBudgetError(out.str());
            }
            regions = std::move(next);
        }
    }
    return regions;
}

namespace {

/// Regions of one splitter block with the block-transition vector (one
/// coordinate per action) shared by every state of each region.
struct RegionTable {
    std::vector<Term> regions;
    std::vector<std::vector<double>> vectors;
};

RegionTable build_region_table(const FactoredMdp& f, const BlockFormula& b, int region_cap) {
    RegionTable table;
    table.regions = region_partition(f, b, region_cap);
    table.vectors.resize(table.regions.size());
    const int A = f.n_actions();
    for (std::size_t ri = 0; ri < table.regions.size(); ++ri) {
        const std::uint32_t rep = term_min_state(table.regions[ri]);
        table.vectors[ri].resize(A);
        for (int a = 0; a < A; ++a) table.vectors[ri][a] = block_prob_factored(f, rep, a, b);
    }
    return table;
}

struct SymbolicSplitOutcome {
    std::vector<BlockFormula> parts;
    int witness_action = -1;
};

SymbolicSplitOutcome symbolic_split_impl(const FactoredMdp& f, const BlockFormula& c,
                                         const RegionTable& table, double epsilon) {
    std::vector<std::vector<Term>> intersections;
    std::vector<std::vector<double>> items;
    Term merged;
    for (std::size_t ri = 0; ri < table.regions.size(); ++ri) {
        std::vector<Term> terms;
        for (const Term& t : c.terms)
            if (term_conjoin(t, table.regions[ri], merged)) terms.push_back(merged);
        if (terms.empty()) continue;
        intersections.push_back(std::move(terms));
        items.push_back(table.vectors[ri]);
    }
    if (intersections.empty()) throw std::invalid_argument("block formula denotes no state");

    SymbolicSplitOutcome out;
    const std::vector<std::vector<int>> clusters = cluster_epsilon_uniform(items, epsilon);
    if (clusters.size() == 1) {
        out.parts = {c};
        return out;
    }
    const int A = f.n_actions();
    for (int a = 0; a < A && out.witness_action < 0; ++a) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const std::vector<double>& item : items) {
            lo = std::min(lo, item[a]);
            hi = std::max(hi, item[a]);
        }
        if (hi - lo > epsilon + kEqualityTolerance) out.witness_action = a;
    }
    for (const std::vector<int>& cluster : clusters) {
        BlockFormula part;
        for (int pos : cluster)
            part.terms.insert(part.terms.end(), intersections[pos].begin(),
                              intersections[pos].end());
        out.parts.push_back(simplify_formula(part));
    }
    return out;
}

void sort_by_min_state(std::vector<BlockFormula>& blocks) {
    std::sort(blocks.begin(), blocks.end(), [](const BlockFormula& a, const BlockFormula& b) {
        return formula_min_state(a) < formula_min_state(b);
    });
}

Bmdp induce_symbolic(const FactoredMdp& f, const std::vector<BlockFormula>& blocks,
                     int region_cap) {
    const int K = static_cast<int>(blocks.size());
    const int A = f.n_actions();
    Bmdp b = Bmdp::zeros(K, A, f.discount);

    Term merged;
    auto meets = [&merged](const BlockFormula& phi, const Term& region) {
        for (const Term& t : phi.terms)
            if (term_conjoin(t, region, merged)) return true;
        return false;
    };

    const std::vector<DecisionTree::PathLeaf> reward_paths = f.reward_tree.paths();
    for (int i = 0; i < K; ++i) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const DecisionTree::PathLeaf& path : reward_paths) {
            if (!meets(blocks[i], path.condition)) continue;
            lo = std::min(lo, path.value);
            hi = std::max(hi, path.value);
        }
        b.reward_bounds[i] = {lo, hi};
    }

    std::vector<double> lo(A), hi(A);
    for (int j = 0; j < K; ++j) {
        const RegionTable table = build_region_table(f, blocks[j], region_cap);
        for (int i = 0; i < K; ++i) {
            std::fill(lo.begin(), lo.end(), std::numeric_limits<double>::infinity());
            std::fill(hi.begin(), hi.end(), -std::numeric_limits<double>::infinity());
            for (std::size_t ri = 0; ri < table.regions.size(); ++ri) {
                if (!meets(blocks[i], table.regions[ri])) continue;
                for (int a = 0; a < A; ++a) {
                    lo[a] = std::min(lo[a], table.vectors[ri][a]);
                    hi[a] = std::max(hi[a], table.vectors[ri][a]);
                }
            }
            // Region block-probabilities are sums of leaf products; clamp
            // away the summation ulps so the result always validates.
            for (int a = 0; a < A; ++a)
                if (hi[a] > 0.0)
                    b.row(a, i).push_back(
                        {j, {std::clamp(lo[a], 0.0, 1.0), std::clamp(hi[a], 0.0, 1.0)}});
        }
    }
    return b;
}

}  // namespace

std::vector<BlockFormula> symbolic_split(const FactoredMdp& f, const BlockFormula& c,
                                         const BlockFormula& b, double epsilon, int region_cap) {
    require_valid(f);
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
    const RegionTable table = build_region_table(f, b, region_cap);
    return symbolic_split_impl(f, c, table, epsilon).parts;
}

SymbolicReduceResult symbolic_reduce(const FactoredMdp& f, double epsilon, int region_cap) {
    require_valid(f);
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw std::invalid_argument("epsilon must lie in [0, 1)");

    SymbolicReduceResult result;
    result.trace.epsilon = epsilon;
    result.trace.symbolic = true;

    const std::vector<DecisionTree::PathLeaf> reward_paths = f.reward_tree.paths();
    std::vector<std::vector<double>> reward_items(reward_paths.size());
    for (std::size_t i = 0; i < reward_paths.size(); ++i)
        reward_items[i] = {reward_paths[i].value};
    std::vector<BlockFormula> blocks;
    for (const std::vector<int>& cluster : cluster_epsilon_uniform(reward_items, epsilon)) {
        BlockFormula phi;
        for (int pos : cluster) phi.terms.push_back(reward_paths[pos].condition);
        blocks.push_back(simplify_formula(phi));
    }
    sort_by_min_state(blocks);

    const std::uint64_t block_budget =
        f.n_vars() >= 20 ? ~std::uint64_t{0} : (std::uint64_t{1} << f.n_vars());
    int pass = 0;
    for (;;) {
        ++pass;
        if (static_cast<std::uint64_t>(pass) > block_budget + 1)
            throw std::logic_error("symbolic reduction did not quiesce");
        const std::vector<BlockFormula> splitters = blocks;
        const int n_blocks = static_cast<int>(splitters.size());
        std::vector<std::optional<RegionTable>> tables(n_blocks);
        auto table_for = [&](int bi) -> const RegionTable& {
            if (!tables[bi]) tables[bi] = build_region_table(f, splitters[bi], region_cap);
            return *tables[bi];
        };

        bool any_split = false;
        std::vector<BlockFormula> next_blocks;
        next_blocks.reserve(n_blocks);
        for (int ci = 0; ci < n_blocks; ++ci) {
            std::vector<BlockFormula> pieces{splitters[ci]};
            for (int bi = 0; bi < n_blocks; ++bi) {
                std::vector<BlockFormula> refined;
                refined.reserve(pieces.size());
                for (BlockFormula& piece : pieces) {
                    SymbolicSplitOutcome outcome =
                        symbolic_split_impl(f, piece, table_for(bi), epsilon);
                    if (outcome.parts.size() == 1) {
                        refined.push_back(std::move(piece));
                        continue;
                    }
                    any_split = true;
                    SplitEvent ev;
                    ev.pass = pass;
                    ev.parent_block = ci;
                    ev.witness_block = bi;
                    ev.witness_action = outcome.witness_action;
                    ev.parent_formula = std::move(piece);
                    ev.sub_formulas = outcome.parts;
                    result.trace.events.push_back(std::move(ev));
                    for (BlockFormula& part : outcome.parts) refined.push_back(std::move(part));
                }
                pieces = std::move(refined);
            }
            for (BlockFormula& piece : pieces) next_blocks.push_back(std::move(piece));
        }
        sort_by_min_state(next_blocks);
        blocks = std::move(next_blocks);
        if (!any_split) break;
    }
    result.trace.passes = pass;
    result.blocks = std::move(blocks);
    result.bmdp = induce_symbolic(f, result.blocks, region_cap);
    return result;
}

std::vector<int> formula_states(const BlockFormula& phi, int n_vars) {
    if (n_vars < 1 || n_vars > kMaxExpandVars)
        throw std::invalid_argument("fluent count out of range");
    std::vector<int> states;
    for (int q = 0; q < (1 << n_vars); ++q)
        if (evaluate_formula(phi, static_cast<std::uint32_t>(q))) states.push_back(q);
    return states;
}

Partition partition_from_formulas(const std::vector<BlockFormula>& blocks, int n_vars) {
    if (n_vars < 1 || n_vars > kMaxExpandVars)
        throw std::invalid_argument("fluent count out of range");
    const int n = 1 << n_vars;
    std::vector<std::vector<int>> state_blocks(blocks.size());
    for (int q = 0; q < n; ++q) {
        int owner = -1;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            if (!evaluate_formula(blocks[i], static_cast<std::uint32_t>(q))) continue;
            if (owner >= 0) {
                std::ostringstream out;
                out << "formulas overlap at state " << q;
                throw std::invalid_argument(out.str());
            }
            owner = static_cast<int>(i);
        }
        if (owner < 0) {
            std::ostringstream out;
            out << "no formula covers state " << q;
            throw std::invalid_argument(out.str());
        }
        state_blocks[owner].push_back(q);
    }
    return Partition::from_blocks(n, std::move(state_blocks));
}

}  // namespace bmdp
