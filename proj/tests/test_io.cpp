#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <string>
#include <variant>

#include "bmdp/harness.hpp"
#include "bmdp/io.hpp"
#include "bmdp/reduce.hpp"
#include "test_util.hpp"

using namespace bmdp;

namespace {

ParseError capture(const std::string& text) {
    try {
        parse_model(text);
    } catch (const ParseError& e) {
        return e;
    }
    throw std::logic_error("expected a parse error");
}

}  // namespace

TEST_CASE("a minimal mdp file parses field for field") {
    const std::string text =
        "mdp\n"
        "# a two state chain\n"
        "states 2\n"
        "actions 1\n"
        "discount 0.5\n"
        "\n"
        "reward 0 0\n"
        "reward 1 1  # absorbing goal\n"
        "t 0 0 1 1\n"
        "t 0 1 1 1\n";
    const ParsedModel parsed = parse_model(text);
    REQUIRE(std::holds_alternative<ExplicitMdp>(parsed));
    const ExplicitMdp& m = std::get<ExplicitMdp>(parsed);
    CHECK(m.n_states == 2);
    CHECK(m.n_actions == 1);
    CHECK(m.discount == 0.5);
    CHECK(m.rewards == std::vector<double>{0.0, 1.0});
    CHECK(m.row(0, 0) == TransitionRow{{1, 1.0}});
    CHECK(m.row(0, 1) == TransitionRow{{1, 1.0}});
}

TEST_CASE("parse errors carry their kind and line") {
    SUBCASE("unknown format tag is syntactic") {
        const ParseError e = capture("mdpx\nstates 1\n");
        CHECK(e.kind() == ParseError::Kind::Syntax);
        CHECK(e.line() == 1);
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
    SUBCASE("token after the tag is syntactic") {
        CHECK(capture("mdp extra\n").kind() == ParseError::Kind::Syntax);
    }
    SUBCASE("empty input is syntactic") {
        CHECK(capture("# only a comment\n").kind() == ParseError::Kind::Syntax);
    }
    SUBCASE("short transition line is syntactic") {
        const ParseError e = capture(
            "mdp\nstates 1\nactions 1\ndiscount 0\nreward 0 1\nt 0 0 0\n");
        CHECK(e.kind() == ParseError::Kind::Syntax);
        CHECK(e.line() == 6);
    }
    SUBCASE("discount one is semantic") {
        const ParseError e = capture(
            "mdp\nstates 1\nactions 1\ndiscount 1.0\nreward 0 1\nt 0 0 0 1\n");
        CHECK(e.kind() == ParseError::Kind::Semantic);
        CHECK(std::string(e.what()).find("discount") != std::string::npos);
    }
    SUBCASE("duplicate reward is semantic") {
        const ParseError e = capture(
            "mdp\nstates 1\nactions 1\ndiscount 0\nreward 0 1\nreward 0 2\nt 0 0 0 1\n");
        CHECK(e.kind() == ParseError::Kind::Semantic);
        CHECK(e.line() == 6);
    }
    SUBCASE("duplicate transition entry is semantic") {
        const ParseError e = capture(
            "mdp\nstates 1\nactions 1\ndiscount 0\nreward 0 1\nt 0 0 0 0.5\nt 0 0 0 0.5\n");
        CHECK(e.kind() == ParseError::Kind::Semantic);
        CHECK(e.line() == 7);
    }
    SUBCASE("state out of range is semantic") {
        const ParseError e = capture(
            "mdp\nstates 1\nactions 1\ndiscount 0\nreward 3 1\nt 0 0 0 1\n");
        CHECK(e.kind() == ParseError::Kind::Semantic);
        CHECK(std::string(e.what()).find("out of range") != std::string::npos);
    }
    SUBCASE("row sums are validated after parsing") {
        const ParseError e = capture(
            "mdp\nstates 1\nactions 1\ndiscount 0\nreward 0 1\nt 0 0 0 0.5\n");
        CHECK(e.kind() == ParseError::Kind::Semantic);
    }
    SUBCASE("bad interval order is semantic") {
        const ParseError e = capture(
            "bmdp\nstates 1\nactions 1\ndiscount 0\nreward 0 1 1\nt 0 0 0 0.9 0.8\n");
        CHECK(e.kind() == ParseError::Kind::Semantic);
    }
}

TEST_CASE("format_real round-trips doubles") {
    for (double v : {1.0 / 3.0, 0.1, 1e-17, 123456.789, 0.0, 1.0}) {
        const std::string s = format_real(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("serialization is canonical and parse-stable") {
    SUBCASE("explicit mdps") {
        for (std::uint64_t seed = 0; seed < 15; ++seed) {
            const ExplicitMdp m = random_explicit_mdp(seed, 6, 3, 4, 0.9, 0, 0.0);
            const std::string text = serialize_model(m);
            const ParsedModel parsed = parse_model(text);
            REQUIRE(std::holds_alternative<ExplicitMdp>(parsed));
            CHECK(serialize_model(std::get<ExplicitMdp>(parsed)) == text);
        }
    }
    SUBCASE("bounded-parameter mdps") {
        for (std::uint64_t seed = 0; seed < 15; ++seed) {
            const Bmdp b = random_bmdp(seed, 5, 2, 3, 0.9, 0.15);
            const std::string text = serialize_model(b);
            const ParsedModel parsed = parse_model(text);
            REQUIRE(std::holds_alternative<Bmdp>(parsed));
            CHECK(serialize_model(std::get<Bmdp>(parsed)) == text);
        }
    }
    SUBCASE("factored mdps") {
        for (std::uint64_t seed = 0; seed < 15; ++seed) {
            GeneratorConfig cfg;
            cfg.seed = seed;
            cfg.n_variables = 4;
            cfg.n_actions = 2;
            const FactoredMdp f = generate_factored_mdp(cfg);
            const std::string text = serialize_model(f);
            const ParsedModel parsed = parse_model(text);
            REQUIRE(std::holds_alternative<FactoredMdp>(parsed));
            CHECK(serialize_model(std::get<FactoredMdp>(parsed)) == text);
        }
    }
    SUBCASE("state partitions") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const ExplicitMdp m = random_explicit_mdp(seed, 6, 2, 3, 0.9, 4, 0.4);
            const Partition p = reduce_model(m, 0.0).partition;
            const std::string text = serialize_partition(p);
            const ParsedModel parsed = parse_model(text);
            REQUIRE(std::holds_alternative<TextPartition>(parsed));
            const TextPartition& tp = std::get<TextPartition>(parsed);
            CHECK_FALSE(tp.symbolic);
            const Partition bound = bind_partition(tp, m.n_states);
            CHECK(bound == p);
            CHECK(serialize_partition(bound) == text);
        }
    }
    SUBCASE("formula partitions") {
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            GeneratorConfig cfg;
            cfg.seed = seed;
            cfg.n_variables = 4;
            cfg.n_actions = 2;
            const FactoredMdp f = generate_factored_mdp(cfg);
            const auto blocks = symbolic_reduce(f, 0.0).blocks;
            const std::string text = serialize_partition(blocks, f.variables);
            const ParsedModel parsed = parse_model(text);
            REQUIRE(std::holds_alternative<TextPartition>(parsed));
            const TextPartition& tp = std::get<TextPartition>(parsed);
            CHECK(tp.symbolic);
            const auto bound = bind_formulas(tp, f.variables);
            REQUIRE(bound.size() == blocks.size());
            for (std::size_t i = 0; i < bound.size(); ++i)
                CHECK(oracle::formulas_equivalent(bound[i], blocks[i], cfg.n_variables));
            CHECK(serialize_partition(bound, f.variables) == text);
        }
    }
    SUBCASE("point intervals print both endpoints") {
        Bmdp b = Bmdp::zeros(1, 1, 0.0);
        b.reward_bounds = {{0.25, 0.25}};
        b.row(0, 0) = {{0, {1.0, 1.0}}};
        CHECK(serialize_model(b).find("reward 0 0.25 0.25") != std::string::npos);
        CHECK(serialize_model(b).find("t 0 0 0 1 1") != std::string::npos);
    }
    SUBCASE("invalid models refuse to serialize") {
        ExplicitMdp m;
        m.n_states = 1;
        m.n_actions = 1;
        m.discount = 0.9;
        m.rewards = {1.0};
        m.rows = {{{0, 0.5}}};
        CHECK_THROWS_AS(serialize_model(m), std::invalid_argument);
    }
}

TEST_CASE("partition files follow the block grammar") {
    SUBCASE("state blocks bind in order") {
        const ParsedModel parsed = parse_model("partition\nblock 0 : 0 2\nblock 1 : 1\n");
        const TextPartition& tp = std::get<TextPartition>(parsed);
        const Partition p = bind_partition(tp, 3);
        CHECK(p.blocks == std::vector<std::vector<int>>{{0, 2}, {1}});
    }
    SUBCASE("indices must count up from zero") {
        const ParseError e = capture("partition\nblock 1 : 0\n");
        CHECK(e.kind() == ParseError::Kind::Semantic);
        CHECK(std::string(e.what()).find("start at 0") != std::string::npos);
    }
    SUBCASE("state and formula blocks cannot mix") {
        const ParseError e = capture("partition\nblock 0 : 0 1\nblock 1 : x0 & x1\n");
        CHECK(e.kind() == ParseError::Kind::Semantic);
        CHECK(std::string(e.what()).find("mixed") != std::string::npos);
    }
    SUBCASE("dangling connective is syntactic") {
        CHECK(capture("partition\nblock 0 : x0 &\n").kind() == ParseError::Kind::Syntax);
    }
    SUBCASE("formulas parse DNF with negation") {
        const ParsedModel parsed =
            parse_model("partition\nblock 0 : ! q\nblock 1 : q & p | q & ! p\n");
        const TextPartition& tp = std::get<TextPartition>(parsed);
        REQUIRE(tp.symbolic);
        const auto bound = bind_formulas(tp, {"p", "q"});
        CHECK(bound[0] == BlockFormula{{Term{Literal{1, false}}}});
        CHECK(bound[1] == BlockFormula{{Term{Literal{1, true}}}});
    }
    SUBCASE("the whole space round-trips through a complementary pair") {
        const std::string text = serialize_partition({BlockFormula::whole()}, {"x0", "x1"});
        CHECK(text == "partition\nblock 0 : x0 | ! x0\n");
        const TextPartition tp = std::get<TextPartition>(parse_model(text));
        const auto bound = bind_formulas(tp, {"x0", "x1"});
        REQUIRE(bound.size() == 1);
        CHECK(bound[0] == BlockFormula::whole());
    }
    SUBCASE("unknown fluents fail to bind") {
        const TextPartition tp =
            std::get<TextPartition>(parse_model("partition\nblock 0 : mystery\n"));
        CHECK_THROWS_AS(bind_formulas(tp, {"p", "q"}), std::invalid_argument);
    }
    SUBCASE("binding against the wrong shape throws") {
        const TextPartition states = std::get<TextPartition>(parse_model("partition\nblock 0 : 0\n"));
        CHECK_THROWS_AS(bind_formulas(states, {"p"}), std::invalid_argument);
        const TextPartition formulas =
            std::get<TextPartition>(parse_model("partition\nblock 0 : p | ! p\n"));
        CHECK_THROWS_AS(bind_partition(formulas, 2), std::invalid_argument);
        CHECK_THROWS_AS(bind_partition(states, 2), std::invalid_argument);
    }
}
