#pragma once

#include <cstdint>
#include <vector>

namespace bmdp {

/// One fluent, possibly negated. Variable i corresponds to bit i of an
/// encoded state.
struct Literal {
    int var = 0;
    bool positive = true;

    friend bool operator==(const Literal&, const Literal&) = default;
};

/// Positive literals sort before negative ones at the same variable.
bool literal_less(const Literal& a, const Literal& b);

/// Conjunction of literals, sorted by literal_less, one literal per variable.
/// The empty term denotes the whole state space.
using Term = std::vector<Literal>;

bool term_less(const Term& a, const Term& b);

/// Disjunction of terms (DNF). Canonical form keeps terms sorted by
/// term_less without duplicates; an empty term list denotes the empty set.
struct BlockFormula {
    std::vector<Term> terms;

    friend bool operator==(const BlockFormula&, const BlockFormula&) = default;

    /// Whole state space: the single empty term.
    static BlockFormula whole() { return BlockFormula{{Term{}}}; }
};

/// Conjoins two terms into `out`. Returns false when they clash on some
/// variable, in which case `out` is left unspecified.
bool term_conjoin(const Term& a, const Term& b, Term& out);

bool evaluate_term(const Term& term, std::uint32_t state_bits);
bool evaluate_formula(const BlockFormula& phi, std::uint32_t state_bits);

/// Sorts literals within terms, then sorts and deduplicates the terms.
void canonicalize(BlockFormula& phi);

/// Sorted distinct variables mentioned anywhere in the formula.
std::vector<int> formula_vars(const BlockFormula& phi);

/// Smallest satisfying state of a term: its positive literals set, every
/// other variable false.
std::uint32_t term_min_state(const Term& term);

/// Smallest satisfying state of a formula, or UINT64_MAX when it has none.
std::uint64_t formula_min_state(const BlockFormula& phi);

/// Semantics-preserving shrink to a fixed point of two rewrites: drop terms
/// absorbed by a subset term, and merge term pairs that differ only in the
/// sign of one variable. The result is canonical.
BlockFormula simplify_formula(const BlockFormula& phi);

}  // namespace bmdp
