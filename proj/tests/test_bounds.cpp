#include <gtest/gtest.h>

#include "qpkid/bounds.hpp"

using namespace qpkid;
using namespace qpkid::bounds;
using keys::Variant;

TEST(PBreak, Examples) {
    EXPECT_NEAR(p_break_bound(2, 83, Variant::standard), 2.0 * std::pow(15.0 / 16.0, 83), 1e-15);
    EXPECT_NEAR(p_break_bound(2, 83, Variant::standard), 0.00943291534, 1e-11);
    EXPECT_NEAR(p_break_bound(2, 82, Variant::standard), 0.01006177637, 1e-11);
    EXPECT_NEAR(p_break_bound(1, 1, Variant::hardened), 15.0 / 16.0, 1e-15);
    EXPECT_THROW(p_break_bound(2, 0, Variant::standard), InvalidArgument);
    EXPECT_THROW(p_break_bound(0, 3, Variant::standard), InvalidArgument);
}

TEST(PBreak, HardenedIsNeverSmaller) {
    for (int r = 1; r <= 16; ++r)
        for (int s = 1; s <= 200; s += 7)
            EXPECT_GE(p_break_bound(r, s, Variant::hardened), p_break_bound(r, s, Variant::standard));
}

TEST(PBreak, EightCrLn2RoundsHalveTheBound) {
    // (1 - 1/(8r))^{ceil(8r ln 2)} <= 1/2
    for (int r : {1, 2, 4, 8, 16, 64}) {
        const int ds = static_cast<int>(std::ceil(8.0 * r * std::numbers::ln2));
        for (int s = 1; s <= 40; s += 13)
            EXPECT_LE(p_break_bound(r, s + ds, Variant::standard), 0.5 * p_break_bound(r, s, Variant::standard));
    }
    EXPECT_EQ(static_cast<int>(std::ceil(8.0 * 2 * std::numbers::ln2)), 12);
}

TEST(UnionChain, TermsUseGrowingCopyCounts) {
    const auto e = union_bound_chain(1, 4, 10, Variant::standard);
    ASSERT_EQ(e.per_attempt.size(), 3u);
    for (int l = 1; l <= 3; ++l)
        EXPECT_DOUBLE_EQ(e.per_attempt[l - 1], adversary::fool_first_attempt_bound(1 + l - 1, 10));
    double sum = 0.0;
    for (double v : e.per_attempt) sum += v;
    EXPECT_DOUBLE_EQ(e.chain_sum, sum);

    const auto h = union_bound_chain(1, 4, 10, Variant::hardened);
    for (int l = 1; l <= 3; ++l)
        EXPECT_DOUBLE_EQ(h.per_attempt[l - 1], adversary::fool_first_attempt_bound(1 + l - 1 + 4, 10));
}

TEST(UnionChain, ChainStaysBelowClosedForm) {
    for (auto v : {Variant::standard, Variant::hardened})
        for (int r = 1; r <= 12; ++r)
            for (int t = 0; t < r; ++t)
                for (int s : {1, 5, 40, 120}) {
                    const auto e = union_bound_chain(t, r, s, v);
                    EXPECT_LE(e.chain_sum, e.chain_bound * (1 + 1e-12)) << "r=" << r << " t=" << t << " s=" << s;
                    EXPECT_LE(e.chain_bound, e.p_break_bound * (1 + 1e-12));
                }
}

TEST(UnionChain, RejectsBadRange) {
    EXPECT_THROW(union_bound_chain(4, 4, 10, Variant::standard), InvalidArgument);
    EXPECT_THROW(union_bound_chain(-1, 4, 10, Variant::standard), InvalidArgument);
}

TEST(Advisor, MatchesKnownValue) { EXPECT_EQ(min_security_parameter(2, 0.01, Variant::standard), 83); }

TEST(Advisor, BoundaryConditionOnGrid) {
    for (auto v : {Variant::standard, Variant::hardened})
        for (int r = 1; r <= 32; r *= 2)
            for (double eps : {0.5, 0.1, 1e-2, 1e-3, 1e-6, 1e-9}) {
                const int s = min_security_parameter(r, eps, v);
                EXPECT_LE(p_break_bound(r, s, v), eps);
                if (s > 1) {
                    EXPECT_GT(p_break_bound(r, s - 1, v), eps);
                }
            }
}

TEST(Advisor, LargeEpsilonGivesOneRound) {
    EXPECT_EQ(min_security_parameter(3, 5.0, Variant::standard), 1);
    EXPECT_THROW(min_security_parameter(3, 0.0, Variant::standard), InvalidArgument);
    EXPECT_THROW(min_security_parameter(3, -1.0, Variant::standard), InvalidArgument);
}

TEST(Advisor, GrowsRoughlyLinearlyInR) {
    // s_min(r) ~ 8 r ln(r/eps); successive doublings more than double s.
    const double eps = 1e-3;
    int prev = min_security_parameter(2, eps, Variant::standard);
    for (int r : {4, 8, 16}) {
        const int s = min_security_parameter(r, eps, Variant::standard);
        EXPECT_GT(s, 2 * prev);
        EXPECT_NEAR(s, 8.0 * r * std::log(r / eps), 8.0 * r * 0.1 + 2);
        prev = s;
    }
}
