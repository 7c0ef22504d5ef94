#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>

#include "bmdp/bmdp.hpp"
#include "bmdp/factored.hpp"
#include "bmdp/mdp.hpp"
#include "bmdp/reduce.hpp"

namespace bmdp {

/// Parse failure with the 1-based line it was detected on. Syntax covers
/// malformed input, Semantic covers well-formed input that fails validation
/// or referential checks.
class ParseError : public std::runtime_error {
  public:
    enum class Kind { Syntax, Semantic };

    ParseError(Kind kind, int line, const std::string& message);

    Kind kind() const { return kind_; }
    int line() const { return line_; }

  private:
    Kind kind_;
    int line_;
};

struct NamedLiteral {
    std::string var;
    bool positive = true;
};
using NamedTerm = std::vector<NamedLiteral>;
using NamedFormula = std::vector<NamedTerm>;

/// Partition as read from a file: either state-list blocks or DNF blocks
/// over named fluents, never both.
struct TextPartition {
    bool symbolic = false;
    std::vector<std::vector<int>> state_blocks;
    std::vector<NamedFormula> formula_blocks;
};

using ParsedModel = std::variant<ExplicitMdp, Bmdp, FactoredMdp, TextPartition>;

/// Parses any of the four line-oriented formats, dispatching on the first
/// token. Models are validated after parsing; validation failures raise
/// semantic ParseErrors. '#' starts a comment anywhere on a line.
ParsedModel parse_model(const std::string& text);

/// Real formatted with 17 significant digits, enough to round-trip a double.
std::string format_real(double v);

/// Canonical serialization: fixed header order, states ascending, actions
/// ascending, row entries ascending, one entry per line, LF line endings.
/// parse_model(serialize_model(x)) reproduces x exactly.
std::string serialize_model(const ExplicitMdp& m);
std::string serialize_model(const Bmdp& b);
std::string serialize_model(const FactoredMdp& f);

std::string serialize_partition(const Partition& p);
std::string serialize_partition(const std::vector<BlockFormula>& blocks,
                                const std::vector<std::string>& var_names);

/// Resolves a state-list text partition against a state count.
Partition bind_partition(const TextPartition& text, int n_states);

/// Resolves a symbolic text partition against declared fluent names. The
/// formulas come back simplified.
std::vector<BlockFormula> bind_formulas(const TextPartition& text,
                                        const std::vector<std::string>& var_names);

}  // namespace bmdp
