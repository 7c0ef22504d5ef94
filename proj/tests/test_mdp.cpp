#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bmdp/harness.hpp"
#include "bmdp/mdp.hpp"
#include "test_util.hpp"

using namespace bmdp;

namespace {

// Single state, self-loop, R = 1.
ExplicitMdp self_loop(double discount) {
    ExplicitMdp m = ExplicitMdp::zeros(1, 1, discount);
    m.rewards[0] = 1.0;
    m.row(0, 0) = {{0, 1.0}};
    return m;
}

// s0 -> s1 with certainty, s1 self-loop, R = (0, 1).
ExplicitMdp chain() {
    ExplicitMdp m = ExplicitMdp::zeros(2, 1, 0.5);
    m.rewards = {0.0, 1.0};
    m.row(0, 0) = {{1, 1.0}};
    m.row(0, 1) = {{1, 1.0}};
    return m;
}

}  // namespace

TEST_CASE("validation accepts a well-formed model") {
    CHECK(validate_mdp(chain()).ok());
    CHECK(validate_mdp(self_loop(0.9)).ok());
}

TEST_CASE("validation reports each violation with its location") {
    SUBCASE("row sum off") {
        ExplicitMdp m = self_loop(0.9);
        m.row(0, 0) = {{0, 0.9}};
        const ValidationReport rep = validate_mdp(m);
        REQUIRE_FALSE(rep.ok());
        CHECK(rep.violations.front().find("row sum") != std::string::npos);
        CHECK(rep.violations.front().find("(a0, s0)") != std::string::npos);
    }
    SUBCASE("probability out of range") {
        ExplicitMdp m = self_loop(0.9);
        m.row(0, 0) = {{0, 1.2}};
        const ValidationReport rep = validate_mdp(m);
        REQUIRE_FALSE(rep.ok());
        bool mentioned = false;
        for (const std::string& v : rep.violations)
            mentioned = mentioned || v.find("out of range") != std::string::npos;
        CHECK(mentioned);
    }
    SUBCASE("discount not below one") {
        ExplicitMdp m = self_loop(0.9);
        m.discount = 1.0;
        CHECK_FALSE(validate_mdp(m).ok());
    }
    SUBCASE("duplicate to-state") {
        ExplicitMdp m = ExplicitMdp::zeros(2, 1, 0.9);
        m.row(0, 0) = {{1, 0.5}, {1, 0.5}};
        m.row(0, 1) = {{1, 1.0}};
        CHECK_FALSE(validate_mdp(m).ok());
    }
    SUBCASE("unsorted row") {
        ExplicitMdp m = ExplicitMdp::zeros(2, 1, 0.9);
        m.row(0, 0) = {{1, 0.5}, {0, 0.5}};
        m.row(0, 1) = {{1, 1.0}};
        CHECK_FALSE(validate_mdp(m).ok());
    }
}

TEST_CASE("policy evaluation matches closed forms") {
    SUBCASE("self-loop geometric series") {
        const ValueVector v = policy_evaluate(self_loop(0.9), {0}, 1e-9);
        CHECK(std::fabs(v[0] - 10.0) < 1e-8);
    }
    SUBCASE("discount zero returns the rewards after one sweep") {
        ExplicitMdp m = chain();
        m.discount = 0.0;
        const ValueVector v = policy_evaluate(m, {0, 0}, 1e-9);
        CHECK(v[0] == 0.0);
        CHECK(v[1] == 1.0);
    }
    SUBCASE("two-state chain") {
        const ValueVector v = policy_evaluate(chain(), {0, 0}, 1e-9);
        CHECK(std::fabs(v[0] - 1.0) < 1e-8);
        CHECK(std::fabs(v[1] - 2.0) < 1e-8);
    }
}

TEST_CASE("policy evaluation agrees with the dense linear solve") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const ExplicitMdp m = random_explicit_mdp(seed, 2 + seed % 5, 1 + seed % 3, 3, 0.9);
        Policy policy(m.n_states);
        for (int s = 0; s < m.n_states; ++s) policy[s] = static_cast<int>(seed + s) % m.n_actions;
        const ValueVector v = policy_evaluate(m, policy, 1e-9, Exec::Serial);
        const std::vector<double> exact = oracle::solve_policy_linear(m, policy);
        CHECK(oracle::max_abs_diff(v, exact) < 1e-8);
    }
}

TEST_CASE("value iteration finds the optimum of small models") {
    SUBCASE("single action reduces to policy evaluation") {
        const ExplicitMdp m = chain();
        const VIResult r = value_iterate(m, 1e-9);
        CHECK(oracle::max_abs_diff(r.values, policy_evaluate(m, {0, 0}, 1e-9)) < 1e-12);
        CHECK(r.policy == Policy{0, 0});
    }
    SUBCASE("discount zero yields rewards and the tie-break policy") {
        ExplicitMdp m = random_explicit_mdp(7, 5, 3, 3, 0.9);
        m.discount = 0.0;
        const VIResult r = value_iterate(m, 1e-6);
        CHECK(r.values == m.rewards);
        CHECK(r.policy == Policy(5, 0));
        CHECK(r.iterations == 1);
    }
    SUBCASE("brute-force policy enumeration cross-check") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            const ExplicitMdp m = random_explicit_mdp(seed, 2 + seed % 5, 2, 3, 0.9);
            const VIResult r = value_iterate(m, 1e-8, Exec::Serial);
            CHECK(oracle::max_abs_diff(r.values, oracle::brute_force_optimal(m)) < 1e-6);
        }
    }
}

TEST_CASE("greedy policy dominates every enumerated policy") {
    const ExplicitMdp m = random_explicit_mdp(42, 4, 3, 2, 0.9);
    const VIResult r = value_iterate(m, 1e-9, Exec::Serial);
    const ValueVector greedy_value = policy_evaluate(m, r.policy, 1e-9, Exec::Serial);
    oracle::for_each_policy(m.n_states, m.n_actions, [&](const Policy& policy) {
        const ValueVector v = policy_evaluate(m, policy, 1e-9, Exec::Serial);
        for (int s = 0; s < m.n_states; ++s) CHECK(greedy_value[s] >= v[s] - 2e-9);
    });
}

TEST_CASE("ties break toward the smallest action index") {
    ExplicitMdp m = ExplicitMdp::zeros(2, 2, 0.9);
    m.rewards = {1.0, 2.0};
    for (int a = 0; a < 2; ++a) {
        m.row(a, 0) = {{1, 1.0}};
        m.row(a, 1) = {{1, 1.0}};
    }
    CHECK(value_iterate(m, 1e-6).policy == Policy{0, 0});
}

TEST_CASE("residuals contract at rate gamma") {
    const ExplicitMdp m = random_explicit_mdp(3, 6, 2, 4, 0.9);
    const VIResult r = value_iterate(m, 1e-10);
    for (std::size_t k = 1; k < r.residuals.size(); ++k)
        CHECK(r.residuals[k] <= m.discount * r.residuals[k - 1] + 1e-12);
}

TEST_CASE("serial and parallel kernels are bit-identical") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const ExplicitMdp m = random_explicit_mdp(seed, 40, 3, 6, 0.95);
        const VIResult serial = value_iterate(m, 1e-7, Exec::Serial);
        const VIResult parallel = value_iterate(m, 1e-7, Exec::Parallel);
        CHECK(serial.values == parallel.values);
        CHECK(serial.policy == parallel.policy);
        CHECK(serial.iterations == parallel.iterations);
        const Policy policy(m.n_states, 1);
        CHECK(policy_evaluate(m, policy, 1e-7, Exec::Serial) ==
              policy_evaluate(m, policy, 1e-7, Exec::Parallel));
    }
}

TEST_CASE("invalid inputs are rejected") {
    ExplicitMdp bad = self_loop(0.9);
    bad.row(0, 0) = {{0, 0.5}};
    CHECK_THROWS_AS(policy_evaluate(bad, {0}, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(value_iterate(bad, 1e-6), std::invalid_argument);
    const ExplicitMdp good = self_loop(0.9);
    CHECK_THROWS_AS(policy_evaluate(good, {1}, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(policy_evaluate(good, {0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(value_iterate(good, -1.0), std::invalid_argument);
}

TEST_CASE("stop threshold handles the discount-zero corner") {
    CHECK(std::isinf(residual_threshold(1e-6, 0.0)));
    CHECK(residual_threshold(1e-6, 0.9) == doctest::Approx(1e-6 * 0.1 / 1.8));
}
