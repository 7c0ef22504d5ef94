#include "bmdp/formula.hpp"

#include <algorithm>
#include <limits>

namespace bmdp {

bool literal_less(const Literal& a, const Literal& b) {
    if (a.var != b.var) return a.var < b.var;
    return a.positive && !b.positive;
}

bool term_less(const Term& a, const Term& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), literal_less);
}

bool term_conjoin(const Term& a, const Term& b, Term& out) {
    out.clear();
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].var < b[j].var) {
            out.push_back(a[i++]);
        } else if (b[j].var < a[i].var) {
            out.push_back(b[j++]);
        } else {
            if (a[i].positive != b[j].positive) return false;
            out.push_back(a[i++]);
            ++j;
        }
    }
    out.insert(out.end(), a.begin() + i, a.end());
    out.insert(out.end(), b.begin() + j, b.end());
    return true;
}

bool evaluate_term(const Term& term, std::uint32_t state_bits) {
    for (const Literal& lit : term) {
        const bool set = (state_bits >> lit.var) & 1u;
        if (set != lit.positive) return false;
    }
    return true;
}

bool evaluate_formula(const BlockFormula& phi, std::uint32_t state_bits) {
    for (const Term& term : phi.terms)
        if (evaluate_term(term, state_bits)) return true;
    return false;
}

void canonicalize(BlockFormula& phi) {
    for (Term& term : phi.terms) std::sort(term.begin(), term.end(), literal_less);
    std::sort(phi.terms.begin(), phi.terms.end(), term_less);
    phi.terms.erase(std::unique(phi.terms.begin(), phi.terms.end()), phi.terms.end());
}

std::vector<int> formula_vars(const BlockFormula& phi) {
    std::vector<int> vars;
    for (const Term& term : phi.terms)
        for (const Literal& lit : term) vars.push_back(lit.var);
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    return vars;
}

std::uint32_t term_min_state(const Term& term) {
    std::uint32_t bits = 0;
    for (const Literal& lit : term)
        if (lit.positive) bits |= 1u << lit.var;
    return bits;
}

std::uint64_t formula_min_state(const BlockFormula& phi) {
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    for (const Term& term : phi.terms) best = std::min<std::uint64_t>(best, term_min_state(term));
    return best;
}

namespace {

/// True when every literal of a occurs in b.
bool term_subset(const Term& a, const Term& b) {
    std::size_t j = 0;
    for (const Literal& lit : a) {
        while (j < b.size() && b[j].var < lit.var) ++j;
        if (j >= b.size() || !(b[j] == lit)) return false;
        ++j;
    }
    return true;
}

/// Merges terms over identical variable sets that differ in exactly one
/// sign; the merged term drops that variable.
bool term_merge(const Term& a, const Term& b, Term& out) {
    if (a.size() != b.size()) return false;
    int flips = 0;
    std::size_t flip_at = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].var != b[i].var) return false;
        if (a[i].positive != b[i].positive) {
            ++flips;
            flip_at = i;
        }
    }
    if (flips != 1) return false;
    out.clear();
    out.reserve(a.size() - 1);
    for (std::size_t i = 0; i < a.size(); ++i)
        if (i != flip_at) out.push_back(a[i]);
    return true;
}

}  // namespace

BlockFormula simplify_formula(const BlockFormula& phi) {
    BlockFormula f = phi;
    canonicalize(f);
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<Term> kept;
        kept.reserve(f.terms.size());
        for (std::size_t i = 0; i < f.terms.size(); ++i) {
            bool absorbed = false;
            for (std::size_t j = 0; j < f.terms.size() && !absorbed; ++j)
                if (j != i && term_subset(f.terms[j], f.terms[i])) absorbed = true;
            if (!absorbed) kept.push_back(f.terms[i]);
        }
        if (kept.size() != f.terms.size()) changed = true;
        f.terms = std::move(kept);

        Term merged;
        for (std::size_t i = 0; i < f.terms.size() && !changed; ++i)
            for (std::size_t j = i + 1; j < f.terms.size() && !changed; ++j)
                if (term_merge(f.terms[i], f.terms[j], merged)) {
                    f.terms.erase(f.terms.begin() + j);
                    f.terms.erase(f.terms.begin() + i);
                    f.terms.push_back(merged);
                    changed = true;
                }
        canonicalize(f);
    }
    return f;
}

}  // namespace bmdp
