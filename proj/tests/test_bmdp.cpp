#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bmdp/bmdp.hpp"
#include "bmdp/harness.hpp"
#include "test_util.hpp"

using namespace bmdp;

namespace {

// Two states, two actions, genuinely wide intervals, valid by construction.
Bmdp wide_bmdp() {
    Bmdp b = Bmdp::zeros(2, 2, 0.9);
    b.reward_bounds = {{0.0, 0.5}, {1.0, 1.0}};
    b.row(0, 0) = {{0, {0.2, 0.6}}, {1, {0.4, 0.8}}};
    b.row(0, 1) = {{0, {0.0, 0.3}}, {1, {0.7, 1.0}}};
    b.row(1, 0) = {{1, {1.0, 1.0}}};
    b.row(1, 1) = {{0, {0.5, 0.5}}, {1, {0.5, 0.5}}};
    return b;
}

}  // namespace

TEST_CASE("point embedding validates and stays degenerate") {
    const ExplicitMdp m = random_explicit_mdp(11, 4, 2, 3, 0.9);
    const Bmdp b = point_bmdp(m);
    CHECK(validate_bmdp(b).ok());
    for (int s = 0; s < m.n_states; ++s) {
        CHECK(b.reward_bounds[s].lo == m.rewards[s]);
        CHECK(b.reward_bounds[s].hi == m.rewards[s]);
    }
    for (int a = 0; a < m.n_actions; ++a)
        for (int s = 0; s < m.n_states; ++s) {
            REQUIRE(b.row(a, s).size() == m.row(a, s).size());
            for (std::size_t i = 0; i < m.row(a, s).size(); ++i) {
                CHECK(b.row(a, s)[i].to == m.row(a, s)[i].to);
                CHECK(b.row(a, s)[i].prob.lo == m.row(a, s)[i].prob);
                CHECK(b.row(a, s)[i].prob.hi == m.row(a, s)[i].prob);
            }
        }
}

TEST_CASE("validation reports interval and row-sum violations") {
    SUBCASE("lower sums above one") {
        Bmdp b = wide_bmdp();
        b.row(0, 0) = {{0, {0.6, 0.7}}, {1, {0.5, 0.6}}};
        const ValidationReport rep = validate_bmdp(b);
        REQUIRE_FALSE(rep.ok());
        bool mentioned = false;
        for (const std::string& v : rep.violations)
            mentioned = mentioned || v.find("lower") != std::string::npos;
        CHECK(mentioned);
    }
    SUBCASE("upper sums below one") {
        Bmdp b = wide_bmdp();
        b.row(1, 0) = {{1, {0.4, 0.9}}};
        CHECK_FALSE(validate_bmdp(b).ok());
    }
    SUBCASE("inverted interval") {
        Bmdp b = wide_bmdp();
        b.reward_bounds[0] = {0.6, 0.4};
        CHECK_FALSE(validate_bmdp(b).ok());
    }
    SUBCASE("probability bound out of range") {
        Bmdp b = wide_bmdp();
        b.row(1, 0) = {{1, {0.9, 1.2}}};
        CHECK_FALSE(validate_bmdp(b).ok());
    }
    CHECK(validate_bmdp(wide_bmdp()).ok());
}

TEST_CASE("membership accepts the family and rejects outsiders") {
    const ExplicitMdp m = random_explicit_mdp(5, 5, 2, 3, 0.9);
    const Bmdp point = point_bmdp(m);
    CHECK(contains_member(point, m));

    SUBCASE("widening keeps members inside") {
        Bmdp widened = point;
        for (Interval& r : widened.reward_bounds) {
            r.lo -= 0.1;
            r.hi += 0.1;
        }
        for (BoundedTransitionRow& row : widened.rows)
            for (BoundedTransitionEntry& e : row) {
                e.prob.lo = std::max(0.0, e.prob.lo - 0.1);
                e.prob.hi = std::min(1.0, e.prob.hi + 0.1);
            }
        CHECK(contains_member(widened, m));
    }
    SUBCASE("shifting mass between entries is caught") {
        // The shift keeps the row a distribution, so the model stays valid
        // but leaves the point intervals.
        ExplicitMdp outside = m;
        bool shifted = false;
        for (int a = 0; a < outside.n_actions && !shifted; ++a)
            for (int s = 0; s < outside.n_states && !shifted; ++s) {
                TransitionRow& row = outside.row(a, s);
                if (row.size() < 2) continue;
                const double delta = row[1].prob / 2.0;
                row[0].prob += delta;
                row[1].prob -= delta;
                shifted = true;
            }
        REQUIRE(shifted);
        CHECK_FALSE(contains_member(point, outside));
    }
    SUBCASE("an entry missing from the bounds counts as [0, 0]") {
        ExplicitMdp moved = m;
        // Shift mass onto a to-state absent from the point row.
        TransitionRow& row = moved.row(0, 0);
        const int missing = (row.front().to + 1) % m.n_states;
        bool present = false;
        for (const TransitionEntry& e : row) present = present || e.to == missing;
        if (!present) {
            row.front().prob -= 0.05;
            row.push_back({missing, 0.05});
            std::sort(row.begin(), row.end(),
                      [](const TransitionEntry& a, const TransitionEntry& b) { return a.to < b.to; });
            CHECK_FALSE(contains_member(point, moved));
        }
    }
    SUBCASE("shape mismatch throws") {
        const ExplicitMdp other = random_explicit_mdp(6, 4, 2, 3, 0.9);
        CHECK_THROWS_AS(contains_member(point, other), std::invalid_argument);
        ExplicitMdp off_discount = m;
        off_discount.discount = 0.8;
        CHECK_THROWS_AS(contains_member(point, off_discount), std::invalid_argument);
    }
}

TEST_CASE("sampling a point family returns the embedded model exactly") {
    const ExplicitMdp m = random_explicit_mdp(17, 4, 2, 3, 0.9);
    const Bmdp point = point_bmdp(m);
    const ExplicitMdp back = sample_member(point, 99);
    CHECK(back.rewards == m.rewards);
    for (int a = 0; a < m.n_actions; ++a)
        for (int s = 0; s < m.n_states; ++s) {
            REQUIRE(back.row(a, s).size() == m.row(a, s).size());
            for (std::size_t i = 0; i < m.row(a, s).size(); ++i)
                CHECK(back.row(a, s)[i].prob == m.row(a, s)[i].prob);
        }
}

TEST_CASE("sampling is deterministic in the seed") {
    const Bmdp b = random_bmdp(23, 6, 2, 4, 0.9, 0.2);
    const ExplicitMdp first = sample_member(b, 7);
    const ExplicitMdp second = sample_member(b, 7);
    CHECK(first.rewards == second.rewards);
    CHECK(first.rows.size() == second.rows.size());
    for (std::size_t i = 0; i < first.rows.size(); ++i)
        for (std::size_t j = 0; j < first.rows[i].size(); ++j)
            CHECK(first.rows[i][j].prob == second.rows[i][j].prob);
}

TEST_CASE("every sample is a valid member of its family") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Bmdp b = random_bmdp(seed, 5, 2, 3, 0.9, 0.3);
        REQUIRE(validate_bmdp(b).ok());
        for (std::uint64_t draw = 0; draw < 200; ++draw) {
            const ExplicitMdp m = sample_member(b, draw);
            CHECK(validate_mdp(m).ok());
            CHECK(contains_member(b, m));
        }
    }
    SUBCASE("the hand-built instance too") {
        const Bmdp b = wide_bmdp();
        for (std::uint64_t draw = 0; draw < 200; ++draw)
            CHECK(contains_member(b, sample_member(b, draw)));
    }
}

TEST_CASE("rewards of samples take interval midpoints") {
    const Bmdp b = wide_bmdp();
    const ExplicitMdp m = sample_member(b, 1);
    CHECK(m.rewards[0] == doctest::Approx(0.25));
    CHECK(m.rewards[1] == doctest::Approx(1.0));
}
