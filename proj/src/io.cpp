#include "bmdp/io.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

namespace bmdp {

ParseError::ParseError(Kind kind, int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      kind_(kind),
      line_(line) {}

namespace {

struct Line {
    int number = 0;
    std::vector<std::string> tokens;
};

bool is_punct(char ch) {
    return ch == '(' || ch == ')' || ch == '&' || ch == '|' || ch == '!' || ch == ':';
}

std::vector<Line> tokenize(const std::string& text) {
    std::vector<Line> lines;
    std::istringstream in(text);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.resize(hash);
        Line line;
        line.number = number;
        std::string word;
        auto flush = [&line, &word]() {
            if (!word.empty()) {
                line.tokens.push_back(word);
                word.clear();
            }
        };
        for (char ch : raw) {
            if (std::isspace(static_cast<unsigned char>(ch))) {
                flush();
            } else if (is_punct(ch)) {
                flush();
                line.tokens.emplace_back(1, ch);
            } else {
                word += ch;
            }
        }
        flush();
        if (!line.tokens.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

[[noreturn]] void syntax_error(int line, const std::string& msg) {
    throw ParseError(ParseError::Kind::Syntax, line, msg);
}

[[noreturn]] void semantic_error(int line, const std::string& msg) {
    throw ParseError(ParseError::Kind::Semantic, line, msg);
}

bool looks_like_int(const std::string& tok) {
    std::size_t i = (tok[0] == '-' || tok[0] == '+') ? 1 : 0;
    if (i >= tok.size()) return false;
    for (; i < tok.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return false;
    return true;
}

int parse_int(const std::string& tok, int line) {
    if (!looks_like_int(tok)) syntax_error(line, "expected integer, got '" + tok + "'");
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (errno != 0 || end != tok.c_str() + tok.size() || v < INT_MIN || v > INT_MAX)
        syntax_error(line, "integer '" + tok + "' out of range");
    return static_cast<int>(v);
}

double parse_real(const std::string& tok, int line) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || end == tok.c_str())
        syntax_error(line, "expected number, got '" + tok + "'");
    return v;
}

bool is_name(const std::string& tok) {
    if (tok.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(tok[0])) && tok[0] != '_') return false;
    for (char ch : tok)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') return false;
    return true;
}

const Line& expect_line(const std::vector<Line>& lines, std::size_t idx, int prev_line) {
    if (idx >= lines.size())
        syntax_error(prev_line, "unexpected end of input");
    return lines[idx];
}

void expect_tokens(const Line& line, std::size_t count) {
    if (line.tokens.size() != count)
        syntax_error(line.number, "expected " + std::to_string(count) + " tokens on this line");
}

void expect_keyword(const Line& line, const std::string& keyword) {
    if (line.tokens[0] != keyword)
        syntax_error(line.number, "expected '" + keyword + "', got '" + line.tokens[0] + "'");
}

struct Header {
    int states = 0;
    int actions = 0;
    double discount = 0.0;
    std::size_t next = 0;
};

Header parse_header(const std::vector<Line>& lines) {
    Header h;
    const Line& l1 = expect_line(lines, 1, lines[0].number);
    expect_keyword(l1, "states");
    expect_tokens(l1, 2);
    h.states = parse_int(l1.tokens[1], l1.number);
    const Line& l2 = expect_line(lines, 2, l1.number);
    expect_keyword(l2, "actions");
    expect_tokens(l2, 2);
    h.actions = parse_int(l2.tokens[1], l2.number);
    const Line& l3 = expect_line(lines, 3, l2.number);
    expect_keyword(l3, "discount");
    expect_tokens(l3, 2);
    h.discount = parse_real(l3.tokens[1], l3.number);
    if (h.states <= 0) semantic_error(l1.number, "state count must be positive");
    if (h.actions <= 0) semantic_error(l2.number, "action count must be positive");
    h.next = 4;
    return h;
}

void check_state(int s, int n, int line) {
    if (s < 0 || s >= n)
        semantic_error(line, "state " + std::to_string(s) + " out of range");
}

void check_action(int a, int n, int line) {
    if (a < 0 || a >= n)
        semantic_error(line, "action " + std::to_string(a) + " out of range");
}

void require_model_valid(const ValidationReport& rep) {
    if (rep.ok()) return;
    std::string msg;
    for (std::size_t i = 0; i < rep.violations.size(); ++i) {
        if (i > 0) msg += "; ";
        msg += rep.violations[i];
    }
    semantic_error(0, msg);
}

ExplicitMdp parse_mdp(const std::vector<Line>& lines) {
    const Header h = parse_header(lines);
    ExplicitMdp m = ExplicitMdp::zeros(h.states, h.actions, h.discount);
    std::vector<char> reward_seen(h.states, 0);
    std::vector<std::map<int, int>> row_lines(m.rows.size());
    for (std::size_t idx = h.next; idx < lines.size(); ++idx) {
        const Line& line = lines[idx];
        if (line.tokens[0] == "reward") {
            expect_tokens(line, 3);
            const int s = parse_int(line.tokens[1], line.number);
            check_state(s, h.states, line.number);
            if (reward_seen[s])
                semantic_error(line.number, "duplicate reward for state " + std::to_string(s));
            reward_seen[s] = 1;
            m.rewards[s] = parse_real(line.tokens[2], line.number);
        } else if (line.tokens[0] == "t") {
            expect_tokens(line, 5);
            const int a = parse_int(line.tokens[1], line.number);
            const int from = parse_int(line.tokens[2], line.number);
            const int to = parse_int(line.tokens[3], line.number);
            const double p = parse_real(line.tokens[4], line.number);
            check_action(a, h.actions, line.number);
            check_state(from, h.states, line.number);
            check_state(to, h.states, line.number);
            const std::size_t ri = static_cast<std::size_t>(a) * h.states + from;
            if (!row_lines[ri].emplace(to, line.number).second)
                semantic_error(line.number, "duplicate transition entry");
            m.rows[ri].push_back({to, p});
        } else {
            syntax_error(line.number, "unknown directive '" + line.tokens[0] + "'");
        }
    }
    for (TransitionRow& row : m.rows)
        std::sort(row.begin(), row.end(),
                  [](const TransitionEntry& a, const TransitionEntry& b) { return a.to < b.to; });
    require_model_valid(validate_mdp(m));
    return m;
}

Bmdp parse_bmdp(const std::vector<Line>& lines) {
    const Header h = parse_header(lines);
    Bmdp b = Bmdp::zeros(h.states, h.actions, h.discount);
    std::vector<char> reward_seen(h.states, 0);
    std::vector<std::map<int, int>> row_lines(b.rows.size());
    for (std::size_t idx = h.next; idx < lines.size(); ++idx) {
        const Line& line = lines[idx];
        if (line.tokens[0] == "reward") {
            expect_tokens(line, 4);
            const int s = parse_int(line.tokens[1], line.number);
            check_state(s, h.states, line.number);
            if (reward_seen[s])
                semantic_error(line.number, "duplicate reward for state " + std::to_string(s));
            reward_seen[s] = 1;
            b.reward_bounds[s] = {parse_real(line.tokens[2], line.number),
                                  parse_real(line.tokens[3], line.number)};
        } else if (line.tokens[0] == "t") {
            expect_tokens(line, 6);
            const int a = parse_int(line.tokens[1], line.number);
            const int from = parse_int(line.tokens[2], line.number);
            const int to = parse_int(line.tokens[3], line.number);
            const double lo = parse_real(line.tokens[4], line.number);
            const double hi = parse_real(line.tokens[5], line.number);
            check_action(a, h.actions, line.number);
            check_state(from, h.states, line.number);
            check_state(to, h.states, line.number);
            const std::size_t ri = static_cast<std::size_t>(a) * h.states + from;
            if (!row_lines[ri].emplace(to, line.number).second)
                semantic_error(line.number, "duplicate transition entry");
            b.rows[ri].push_back({to, {lo, hi}});
        } else {
            syntax_error(line.number, "unknown directive '" + line.tokens[0] + "'");
        }
    }
    for (BoundedTransitionRow& row : b.rows)
        std::sort(row.begin(), row.end(),
                  [](const BoundedTransitionEntry& x, const BoundedTransitionEntry& y) {
                      return x.to < y.to;
                  });
    require_model_valid(validate_bmdp(b));
    return b;
}

DecisionTree parse_tree(const Line& line, std::size_t& pos,
                        const std::map<std::string, int>& var_ids) {
    const std::vector<std::string>& toks = line.tokens;
    auto need = [&](const char* what) -> const std::string& {
        if (pos >= toks.size()) syntax_error(line.number, std::string("expected ") + what);
        return toks[pos++];
    };
    if (need("'('") != "(") syntax_error(line.number, "expected '('");
    const std::string& head = need("'leaf' or 'if'");
    if (head == "leaf") {
        const double v = parse_real(need("number"), line.number);
        if (need("')'") != ")") syntax_error(line.number, "expected ')'");
        return DecisionTree::leaf(v);
    }
    if (head == "if") {
        const std::string& name = need("fluent name");
        const auto it = var_ids.find(name);
        if (it == var_ids.end()) semantic_error(line.number, "unknown fluent '" + name + "'");
        const DecisionTree yes = parse_tree(line, pos, var_ids);
        const DecisionTree no = parse_tree(line, pos, var_ids);
        if (need("')'") != ")") syntax_error(line.number, "expected ')'");
        return DecisionTree::test(it->second, yes, no);
    }
    syntax_error(line.number, "expected 'leaf' or 'if', got '" + head + "'");
}

FactoredMdp parse_fmdp(const std::vector<Line>& lines) {
    FactoredMdp f;
    const Line& vars_line = expect_line(lines, 1, lines[0].number);
    expect_keyword(vars_line, "vars");
    if (vars_line.tokens.size() < 2) syntax_error(vars_line.number, "expected fluent names");
    std::map<std::string, int> var_ids;
    for (std::size_t i = 1; i < vars_line.tokens.size(); ++i) {
        const std::string& name = vars_line.tokens[i];
        if (!is_name(name)) syntax_error(vars_line.number, "invalid fluent name '" + name + "'");
        if (!var_ids.emplace(name, static_cast<int>(f.variables.size())).second)
            semantic_error(vars_line.number, "duplicate fluent name " + name);
        f.variables.push_back(name);
    }
    const Line& actions_line = expect_line(lines, 2, vars_line.number);
    expect_keyword(actions_line, "actions");
    if (actions_line.tokens.size() < 2) syntax_error(actions_line.number, "expected action names");
    std::map<std::string, int> action_ids;
    for (std::size_t i = 1; i < actions_line.tokens.size(); ++i) {
        const std::string& name = actions_line.tokens[i];
        if (!is_name(name))
            syntax_error(actions_line.number, "invalid action name '" + name + "'");
        if (!action_ids.emplace(name, static_cast<int>(f.actions.size())).second)
            semantic_error(actions_line.number, "duplicate action name " + name);
        f.actions.push_back(name);
    }
    const Line& discount_line = expect_line(lines, 3, actions_line.number);
    expect_keyword(discount_line, "discount");
    expect_tokens(discount_line, 2);
    f.discount = parse_real(discount_line.tokens[1], discount_line.number);

    f.cpts.assign(f.variables.size() * f.actions.size(), DecisionTree{});
    std::vector<char> cpt_seen(f.cpts.size(), 0);
    bool reward_seen = false;
    for (std::size_t idx = 4; idx < lines.size(); ++idx) {
        const Line& line = lines[idx];
        if (line.tokens[0] == "cpt") {
            if (line.tokens.size() < 3) syntax_error(line.number, "expected action and fluent");
            const auto ait = action_ids.find(line.tokens[1]);
            if (ait == action_ids.end())
                semantic_error(line.number, "unknown action '" + line.tokens[1] + "'");
            const auto vit = var_ids.find(line.tokens[2]);
            if (vit == var_ids.end())
                semantic_error(line.number, "unknown fluent '" + line.tokens[2] + "'");
            std::size_t pos = 3;
            const DecisionTree tree = parse_tree(line, pos, var_ids);
            if (pos != line.tokens.size())
                syntax_error(line.number, "unexpected token after tree");
            const std::size_t ci =
                static_cast<std::size_t>(ait->second) * f.variables.size() + vit->second;
            if (cpt_seen[ci])
                semantic_error(line.number, "duplicate cpt for (" + line.tokens[1] + ", " +
                                                line.tokens[2] + ")");
            cpt_seen[ci] = 1;
            f.cpts[ci] = tree;
        } else if (line.tokens[0] == "reward") {
            std::size_t pos = 1;
            const DecisionTree tree = parse_tree(line, pos, var_ids);
            if (pos != line.tokens.size())
                syntax_error(line.number, "unexpected token after tree");
            if (reward_seen) semantic_error(line.number, "duplicate reward tree");
            reward_seen = true;
            f.reward_tree = tree;
        } else {
            syntax_error(line.number, "unknown directive '" + line.tokens[0] + "'");
        }
    }
    for (int a = 0; a < f.n_actions(); ++a)
        for (int v = 0; v < f.n_vars(); ++v)
            if (!cpt_seen[static_cast<std::size_t>(a) * f.variables.size() + v])
                semantic_error(0, "missing cpt for (" + f.actions[a] + ", " + f.variables[v] + ")");
    if (!reward_seen) semantic_error(0, "missing reward tree");
    require_model_valid(validate_factored(f));
    return f;
}

TextPartition parse_partition(const std::vector<Line>& lines) {
    TextPartition part;
    bool any_states = false, any_formulas = false;
    for (std::size_t idx = 1; idx < lines.size(); ++idx) {
        const Line& line = lines[idx];
        expect_keyword(line, "block");
        if (line.tokens.size() < 4 || line.tokens[2] != ":")
            syntax_error(line.number, "expected 'block <index> : ...'");
        const int index = parse_int(line.tokens[1], line.number);
        const int expected = static_cast<int>(std::max(part.state_blocks.size(),
                                                       part.formula_blocks.size()));
        if (index != expected)
            semantic_error(line.number, "block indices must start at 0 and increase by 1");

        if (looks_like_int(line.tokens[3])) {
            if (any_formulas) semantic_error(line.number, "mixed state and formula blocks");
            any_states = true;
            std::vector<int> states;
            for (std::size_t i = 3; i < line.tokens.size(); ++i) {
                const int s = parse_int(line.tokens[i], line.number);
                if (s < 0) semantic_error(line.number, "negative state index");
                states.push_back(s);
            }
            part.state_blocks.push_back(std::move(states));
        } else {
            if (any_states) semantic_error(line.number, "mixed state and formula blocks");
            any_formulas = true;
            NamedFormula formula;
            NamedTerm term;
            std::size_t i = 3;
            while (i < line.tokens.size()) {
                bool positive = true;
                if (line.tokens[i] == "!") {
                    positive = false;
                    ++i;
                }
                if (i >= line.tokens.size() || !is_name(line.tokens[i]))
                    syntax_error(line.number, "expected fluent name");
                term.push_back({line.tokens[i], positive});
                ++i;
                if (i >= line.tokens.size()) break;
                if (line.tokens[i] != "&" && line.tokens[i] != "|")
                    syntax_error(line.number, "expected '&', '|' or end of line");
                if (line.tokens[i] == "|") {
                    formula.push_back(std::move(term));
                    term.clear();
                }
                ++i;
                if (i >= line.tokens.size()) syntax_error(line.number, "dangling connective");
            }
            formula.push_back(std::move(term));
            part.formula_blocks.push_back(std::move(formula));
        }
    }
    if (!any_states && !any_formulas) semantic_error(0, "partition has no blocks");
    part.symbolic = any_formulas;
    return part;
}

}  // namespace

ParsedModel parse_model(const std::string& text) {
    const std::vector<Line> lines = tokenize(text);
    if (lines.empty()) syntax_error(1, "empty input");
    const Line& tag = lines[0];
    if (tag.tokens.size() != 1) syntax_error(tag.number, "unexpected token after format tag");
    if (tag.tokens[0] == "mdp") return parse_mdp(lines);
    if (tag.tokens[0] == "bmdp") return parse_bmdp(lines);
    if (tag.tokens[0] == "fmdp") return parse_fmdp(lines);
    if (tag.tokens[0] == "partition") return parse_partition(lines);
    syntax_error(tag.number, "unknown format tag '" + tag.tokens[0] + "'");
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string serialize_model(const ExplicitMdp& m) {
    ValidationReport rep = validate_mdp(m);
    if (!rep.ok()) throw std::invalid_argument("invalid mdp: " + rep.violations.front());
    std::ostringstream out;
    out << "mdp\n";
    out << "states " << m.n_states << "\n";
    out << "actions " << m.n_actions << "\n";
    out << "discount " << format_real(m.discount) << "\n";
    for (int s = 0; s < m.n_states; ++s)
        out << "reward " << s << " " << format_real(m.rewards[s]) << "\n";
    for (int a = 0; a < m.n_actions; ++a)
        for (int s = 0; s < m.n_states; ++s)
            for (const TransitionEntry& e : m.row(a, s))
                out << "t " << a << " " << s << " " << e.to << " " << format_real(e.prob) << "\n";
    return out.str();
}

std::string serialize_model(const Bmdp& b) {
    ValidationReport rep = validate_bmdp(b);
    if (!rep.ok()) throw std::invalid_argument("invalid bmdp: " + rep.violations.front());
    std::ostringstream out;
    out << "bmdp\n";
    out << "states " << b.n_states << "\n";
    out << "actions " << b.n_actions << "\n";
    out << "discount " << format_real(b.discount) << "\n";
    for (int s = 0; s < b.n_states; ++s)
        out << "reward " << s << " " << format_real(b.reward_bounds[s].lo) << " "
            << format_real(b.reward_bounds[s].hi) << "\n";
    for (int a = 0; a < b.n_actions; ++a)
        for (int s = 0; s < b.n_states; ++s)
            for (const BoundedTransitionEntry& e : b.row(a, s))
                out << "t " << a << " " << s << " " << e.to << " " << format_real(e.prob.lo) << " "
                    << format_real(e.prob.hi) << "\n";
    return out.str();
}

namespace {

void serialize_tree(const DecisionTree& tree, int at, const std::vector<std::string>& names,
                    std::ostringstream& out) {
    const DecisionTree::Node& node = tree.nodes()[at];
    if (node.var < 0) {
        out << "(leaf " << format_real(node.value) << ")";
        return;
    }
    out << "(if " << names[node.var] << " ";
    serialize_tree(tree, node.yes, names, out);
    out << " ";
    serialize_tree(tree, node.no, names, out);
    out << ")";
}

}  // namespace

std::string serialize_model(const FactoredMdp& f) {
    ValidationReport rep = validate_factored(f);
    if (!rep.ok()) throw std::invalid_argument("invalid factored mdp: " + rep.violations.front());
    std::ostringstream out;
    out << "fmdp\n";
    out << "vars";
    for (const std::string& name : f.variables) out << " " << name;
    out << "\n";
    out << "actions";
    for (const std::string& name : f.actions) out << " " << name;
    out << "\n";
    out << "discount " << format_real(f.discount) << "\n";
    for (int a = 0; a < f.n_actions(); ++a)
        for (int v = 0; v < f.n_vars(); ++v) {
            out << "cpt " << f.actions[a] << " " << f.variables[v] << " ";
            serialize_tree(f.cpt(a, v), f.cpt(a, v).root(), f.variables, out);
            out << "\n";
        }
    out << "reward ";
    serialize_tree(f.reward_tree, f.reward_tree.root(), f.variables, out);
    out << "\n";
    return out.str();
}

std::string serialize_partition(const Partition& p) {
    const Partition canon = Partition::from_blocks(p.n_states, p.blocks);
    std::ostringstream out;
    out << "partition\n";
    for (int bi = 0; bi < canon.size(); ++bi) {
        out << "block " << bi << " :";
        for (int s : canon.blocks[bi]) out << " " << s;
        out << "\n";
    }
    return out.str();
}

std::string serialize_partition(const std::vector<BlockFormula>& blocks,
                                const std::vector<std::string>& var_names) {
    std::ostringstream out;
    out << "partition\n";
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        const BlockFormula phi = simplify_formula(blocks[bi]);
        if (phi.terms.empty()) throw std::invalid_argument("empty block formula");
        out << "block " << bi << " : ";
        if (phi.terms.size() == 1 && phi.terms[0].empty()) {
            // The whole space has no DNF literal form; a complementary pair
            // over the first fluent denotes it within the grammar.
            if (var_names.empty()) throw std::invalid_argument("no fluent names");
            out << var_names[0] << " | ! " << var_names[0] << "\n";
            continue;
        }
        for (std::size_t t = 0; t < phi.terms.size(); ++t) {
            if (t > 0) out << " | ";
            const Term& term = phi.terms[t];
            if (term.empty()) throw std::invalid_argument("redundant whole-space term");
            for (std::size_t l = 0; l < term.size(); ++l) {
                if (l > 0) out << " & ";
                const Literal& lit = term[l];
                if (lit.var < 0 || lit.var >= static_cast<int>(var_names.size()))
                    throw std::invalid_argument("formula fluent outside the name table");
                if (!lit.positive) out << "! ";
                out << var_names[lit.var];
            }
        }
        out << "\n";
    }
    return out.str();
}

Partition bind_partition(const TextPartition& text, int n_states) {
    if (text.symbolic)
        throw std::invalid_argument("partition is symbolic; bind it against fluent names");
    return Partition::from_blocks(n_states, text.state_blocks);
}

std::vector<BlockFormula> bind_formulas(const TextPartition& text,
                                        const std::vector<std::string>& var_names) {
    if (!text.symbolic) throw std::invalid_argument("partition lists states, not formulas");
    std::map<std::string, int> ids;
    for (std::size_t i = 0; i < var_names.size(); ++i)
        ids.emplace(var_names[i], static_cast<int>(i));
    std::vector<BlockFormula> blocks;
    blocks.reserve(text.formula_blocks.size());
    for (const NamedFormula& formula : text.formula_blocks) {
        BlockFormula phi;
        for (const NamedTerm& named : formula) {
            Term term;
            bool contradictory = false;
            for (const NamedLiteral& lit : named) {
                const auto it = ids.find(lit.var);
                if (it == ids.end())
                    throw std::invalid_argument("unknown fluent '" + lit.var + "'");
                term.push_back({it->second, lit.positive});
            }
            std::sort(term.begin(), term.end(), literal_less);
            Term dedup;
            for (const Literal& lit : term) {
                if (!dedup.empty() && dedup.back().var == lit.var) {
                    if (dedup.back().positive != lit.positive) contradictory = true;
                    continue;
                }
                dedup.push_back(lit);
            }
            // A term conjoining a fluent with its negation denotes nothing
            // and drops out of the disjunction.
            if (!contradictory) phi.terms.push_back(std::move(dedup));
        }
        blocks.push_back(simplify_formula(phi));
    }
    return blocks;
}

}  // namespace bmdp
