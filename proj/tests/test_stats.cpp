#include <cmath>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "evoact/stats.hpp"

using namespace evoact;

TEST(Summarize, Examples)
{
    const std::vector<double> ones{1, 1, 1};
    EXPECT_EQ(summarize(ones).mean, 1.0);
    EXPECT_EQ(summarize(ones).stddev, 0.0);
    const std::vector<double> two{0, 2};
    EXPECT_DOUBLE_EQ(summarize(two).mean, 1.0);
    EXPECT_DOUBLE_EQ(summarize(two).stddev, std::sqrt(2.0));
    const std::vector<double> eight{2, 4, 4, 4, 5, 5, 7, 9};
    EXPECT_DOUBLE_EQ(summarize(eight).mean, 5.0);
    EXPECT_NEAR(summarize(eight).stddev, 2.1381, 1e-4);
    EXPECT_THROW((void)summarize(std::vector<double>{}), std::invalid_argument);
}

TEST(StudentizedRange, CriticalValue)
{
    EXPECT_NEAR(studentized_range_critical(0.05, 3, 10), 3.877, 0.01);
    // Further published table entries.
    EXPECT_NEAR(studentized_range_critical(0.05, 2, 30), 2.888, 0.01);
    EXPECT_NEAR(studentized_range_critical(0.05, 4, 87), 3.71, 0.02);
    EXPECT_NEAR(studentized_range_critical(0.01, 3, 10), 5.270, 0.01);
}

TEST(StudentizedRange, CdfSanity)
{
    EXPECT_EQ(studentized_range_cdf(0.0, 3, 10), 0.0);
    EXPECT_NEAR(studentized_range_cdf(50.0, 3, 10), 1.0, 1e-9);
    double prev = 0.0;
    for (double q = 0.1; q < 10.0; q += 0.1) {
        const double f = studentized_range_cdf(q, 4, 20);
        EXPECT_GE(f, prev - 1e-12);
        prev = f;
    }
}

TEST(Tukey, IdenticalGroupsGivePOne)
{
    const std::vector<double> s{1.0, 2.0, 3.0, 4.0};
    const std::vector<RunReport> g{{"a", s}, {"b", s}, {"c", s}};
    for (const auto& r : tukey_hsd(g)) EXPECT_NEAR(r.p_value, 1.0, 1e-12);
}

TEST(Tukey, DegenerateVariance)
{
    const std::vector<RunReport> g{{"a", {1, 1, 1}}, {"b", {1, 1, 1}}, {"c", {2, 2, 2}}};
    const auto res = tukey_hsd(g);
    EXPECT_EQ(res[0].p_value, 1.0);
    EXPECT_EQ(res[1].p_value, 0.0);
    EXPECT_EQ(res[2].p_value, 0.0);
}

TEST(Tukey, ExtremeSeparation)
{
    std::vector<double> a, b;
    for (int i = 0; i < 30; ++i) {
        a.push_back(0.0 + 0.01 * std::sin(i));
        b.push_back(100.0 + 0.01 * std::cos(i));
    }
    const std::vector<RunReport> g{{"a", a}, {"b", b}};
    const auto r = tukey_hsd(g);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_LT(r[0].p_value, 0.001);
    EXPECT_TRUE(r[0].significant);
    EXPECT_NEAR(r[0].mean_difference, -100.0, 0.01);
}

TEST(Tukey, PairSymmetryAndMonotonicity)
{
    const std::vector<double> base{0.1, -0.3, 0.5, 0.2, -0.1, 0.0};
    double prev_p = 1.1;
    for (double shift : {0.0, 0.1, 0.2, 0.4, 0.8}) {
        std::vector<double> moved = base;
        for (auto& v : moved) v += shift;
        const std::vector<RunReport> ab{{"a", base}, {"b", moved}, {"c", base}};
        const std::vector<RunReport> ba{{"b", moved}, {"a", base}, {"c", base}};
        const double p_ab = tukey_hsd(ab)[0].p_value;
        EXPECT_DOUBLE_EQ(p_ab, tukey_hsd(ba)[0].p_value);
        EXPECT_LE(p_ab, prev_p);
        prev_p = p_ab;
    }
}

TEST(Tukey, RejectsTooFewSamples)
{
    const std::vector<RunReport> g{{"a", {1.0}}, {"b", {1.0, 2.0}}};
    EXPECT_THROW((void)tukey_hsd(g), std::invalid_argument);
}

TEST(Tukey, MatchesFrozenReference)
{
    std::ifstream in(std::string(EVOACT_TEST_DATA) + "/tukey_reference.json");
    ASSERT_TRUE(in) << "missing tukey_reference.json";
    const auto ref = nlohmann::json::parse(in);
    EXPECT_NEAR(studentized_range_critical(0.05, 3, 10), ref["q_crit_0.05_3_10"].get<double>(), 1e-3);
    double worst = 0.0;
    for (const auto& c : ref["cases"]) {
        std::vector<RunReport> groups;
        for (const auto& g : c["groups"]) groups.push_back({"g" + std::to_string(groups.size()), g.get<std::vector<double>>()});
        const auto res = tukey_hsd(groups);
        std::size_t k = 0;
        for (const auto& pair : c["pairs"]) worst = std::max(worst, std::abs(res[k++].p_value - pair["p"].get<double>()));
    }
    EXPECT_LT(worst, 0.005);
}
