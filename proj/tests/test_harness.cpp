#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "bmdp/harness.hpp"
#include "bmdp/io.hpp"
#include "test_util.hpp"

using namespace bmdp;

TEST_CASE("the factored generator is deterministic and well-formed") {
    SUBCASE("same seed, same bytes") {
        GeneratorConfig cfg;
        cfg.seed = 7;
        const std::string a = serialize_model(generate_factored_mdp(cfg));
        const std::string b = serialize_model(generate_factored_mdp(cfg));
        CHECK(a == b);
        cfg.seed = 8;
        CHECK(serialize_model(generate_factored_mdp(cfg)) != a);
    }
    SUBCASE("depth zero produces single-leaf trees") {
        GeneratorConfig cfg;
        cfg.seed = 1;
        cfg.max_depth = 0;
        const FactoredMdp f = generate_factored_mdp(cfg);
        for (const DecisionTree& t : f.cpts) CHECK(t.nodes().size() == 1);
        CHECK(f.reward_tree.nodes().size() == 1);
    }
    SUBCASE("generated models validate and expand") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            GeneratorConfig cfg;
            cfg.seed = seed;
            cfg.n_variables = 3 + static_cast<int>(seed % 4);
            cfg.n_actions = 1 + static_cast<int>(seed % 3);
            cfg.max_depth = static_cast<int>(seed % 3);
            const FactoredMdp f = generate_factored_mdp(cfg);
            CHECK(validate_factored(f).ok());
            CHECK(validate_mdp(expand_to_explicit(f)).ok());
        }
    }
    SUBCASE("leaves respect the quantization grid") {
        GeneratorConfig cfg;
        cfg.seed = 5;
        cfg.quant_step = 0.25;
        const FactoredMdp f = generate_factored_mdp(cfg);
        for (const DecisionTree& t : f.cpts)
            for (const auto& node : t.nodes()) {
                if (node.var >= 0) continue;
                const double scaled = node.value / 0.25;
                CHECK(std::fabs(scaled - std::round(scaled)) < 1e-12);
            }
    }
    SUBCASE("invalid configurations throw") {
        GeneratorConfig cfg;
        cfg.n_variables = 0;
        CHECK_THROWS_AS(generate_factored_mdp(cfg), std::invalid_argument);
        cfg = GeneratorConfig{};
        cfg.discount = 1.0;
        CHECK_THROWS_AS(generate_factored_mdp(cfg), std::invalid_argument);
        cfg = GeneratorConfig{};
        cfg.quant_step = 0.0;
        CHECK_THROWS_AS(generate_factored_mdp(cfg), std::invalid_argument);
        cfg = GeneratorConfig{};
        cfg.reward_max = -1.0;
        CHECK_THROWS_AS(generate_factored_mdp(cfg), std::invalid_argument);
    }
}

TEST_CASE("the explicit generators produce valid models") {
    SUBCASE("mdps validate across shapes") {
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            const int n = 2 + static_cast<int>(seed % 7);
            const ExplicitMdp m =
                random_explicit_mdp(seed, n, 1 + static_cast<int>(seed % 3), 3, 0.9);
            CHECK(validate_mdp(m).ok());
            CHECK(m.n_states == n);
        }
    }
    SUBCASE("reward levels quantize onto a grid") {
        const ExplicitMdp m = random_explicit_mdp(11, 8, 2, 3, 0.9, 3, 0.0);
        std::set<double> seen(m.rewards.begin(), m.rewards.end());
        CHECK(seen.size() <= 3);
        for (double r : seen) CHECK((r == 0.0 || r == 0.5 || r == 1.0));
    }
    SUBCASE("duplicate rows force a collapse") {
        const ExplicitMdp m = random_explicit_mdp(4, 6, 2, 3, 0.9, 1, 1.0);
        CHECK(reduce_model(m, 0.0).partition.size() == 1);
    }
    SUBCASE("bmdps validate and keep their base member") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Bmdp b = random_bmdp(seed, 5, 2, 3, 0.9, 0.2);
            CHECK(validate_bmdp(b).ok());
        }
    }
}

TEST_CASE("the partition oracle agrees with refinement") {
    SUBCASE("identical structure collapses") {
        const ExplicitMdp m = random_explicit_mdp(2, 4, 2, 3, 0.9, 1, 1.0);
        CHECK(coarsest_homogeneous_oracle(m, 0.0).size() == 1);
    }
    SUBCASE("distinct rewards split apart") {
        ExplicitMdp m;
        m.n_states = 3;
        m.n_actions = 1;
        m.discount = 0.5;
        m.rewards = {0.0, 0.4, 0.9};
        m.rows = {{{0, 1.0}}, {{1, 1.0}}, {{2, 1.0}}};
        CHECK(coarsest_homogeneous_oracle(m, 0.0).size() == 3);
        CHECK(coarsest_homogeneous_oracle(m, 1.0 - 1e-9).size() == 1);
    }
    SUBCASE("matches reduce_model over random models") {
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            const ExplicitMdp m = random_explicit_mdp(seed, 5, 2, 3, 0.9, 3, 0.4);
            CHECK(coarsest_homogeneous_oracle(m, 0.0) == reduce_model(m, 0.0).partition);
        }
    }
    SUBCASE("large state sets are refused") {
        const ExplicitMdp m = random_explicit_mdp(0, 7, 1, 2, 0.9);
        CHECK_THROWS_AS(coarsest_homogeneous_oracle(m, 0.0), std::invalid_argument);
    }
}

TEST_CASE("epsilon sweeps tabulate the accuracy trade-off") {
    GeneratorConfig cfg;
    cfg.seed = 17;
    cfg.n_variables = 5;
    cfg.n_actions = 2;
    const FactoredMdp f = generate_factored_mdp(cfg);
    SUBCASE("exact reduction has zero widths") {
        const SweepReport rep = epsilon_sweep(f, {0.0});
        REQUIRE(rep.rows.size() == 1);
        CHECK(rep.rows[0].epsilon == 0.0);
        CHECK(rep.rows[0].max_transition_width <= 1e-12);
        CHECK(rep.rows[0].max_reward_width <= 1e-12);
        CHECK(rep.rows[0].max_ivi_width <= 1e-6);
    }
    SUBCASE("interval widths respect epsilon and blocks never grow") {
        const std::vector<double> epsilons = {0.0, 0.02, 0.1, 0.3};
        const SweepReport rep = epsilon_sweep(f, epsilons);
        REQUIRE(rep.rows.size() == 4);
        for (std::size_t i = 0; i < rep.rows.size(); ++i) {
            CHECK(rep.rows[i].epsilon == epsilons[i]);
            CHECK(rep.rows[i].blocks <= rep.rows[0].blocks);
            CHECK(rep.rows[i].max_transition_width <= rep.rows[i].epsilon + 1e-12);
            CHECK(rep.rows[i].mean_ivi_width <= rep.rows[i].max_ivi_width + 1e-15);
        }
    }
    SUBCASE("repeated epsilons repeat rows") {
        const SweepReport rep = epsilon_sweep(f, {0.05, 0.05});
        REQUIRE(rep.rows.size() == 2);
        CHECK(rep.rows[0].blocks == rep.rows[1].blocks);
        CHECK(rep.rows[0].max_ivi_width == rep.rows[1].max_ivi_width);
    }
    SUBCASE("csv header is stable") {
        const SweepReport rep = epsilon_sweep(f, {0.0});
        std::istringstream in(rep.to_csv());
        std::string header;
        std::getline(in, header);
        CHECK(header ==
              "epsilon,blocks,max_transition_width,max_reward_width,mean_ivi_width,max_ivi_width");
        std::istringstream timed(rep.to_csv(true));
        std::getline(timed, header);
        CHECK(header ==
              "epsilon,blocks,max_transition_width,max_reward_width,mean_ivi_width,max_ivi_width,"
              "wall_time_s");
    }
    SUBCASE("epsilon outside the unit interval throws") {
        CHECK_THROWS_AS(epsilon_sweep(f, {-0.1}), std::invalid_argument);
        CHECK_THROWS_AS(epsilon_sweep(f, {1.0}), std::invalid_argument);
    }
}

TEST_CASE("soundness reports audit the full pipeline") {
    SUBCASE("exact reduction is sound with tight bounds") {
        const ExplicitMdp m = random_explicit_mdp(23, 8, 2, 3, 0.9, 2, 0.5);
        const SoundnessReport rep = soundness_report(m, 0.0, 50, 91);
        CHECK(rep.ok(1e-6));
        CHECK(rep.max_bound_width <= 1e-5);
        CHECK(rep.summary().find("blocks") != std::string::npos);
    }
    SUBCASE("approximate reduction stays sound across seeds") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const ExplicitMdp m = random_explicit_mdp(seed, 7, 2, 3, 0.9, 3, 0.3);
            const SoundnessReport rep = soundness_report(m, 0.1, 25, seed + 1);
            CHECK(rep.ok(1e-6));
            CHECK(rep.blocks >= 1);
        }
    }
    SUBCASE("sample counts must be sane") {
        const ExplicitMdp m = random_explicit_mdp(1, 4, 1, 2, 0.9);
        CHECK_THROWS_AS(soundness_report(m, 0.0, -1, 0), std::invalid_argument);
    }
}
