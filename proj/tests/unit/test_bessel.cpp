#include <cmath>

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include "betaspec/bessel.hpp"
#include "betaspec/error.hpp"

using namespace betaspec;

TEST(Bessel, ValuesAtOrigin)
{
    const auto v = spherical_bessel_all(10, 0.0);
    EXPECT_EQ(v[0], 1);
    for (int l = 1; l <= 10; ++l)
        EXPECT_EQ(v[l], 0);
}

TEST(Bessel, MatchesReferenceImplementation)
{
    const int l_max = 60;
    for (double x : {1e-5, 5e-4, 0.01, 0.3, 1.0, 2.5, 7.44, 13.0, 18.6, 26.0, 45.0, 59.5, 60.5, 100.0, 223.0})
    {
        const auto v = spherical_bessel_all(l_max, x);
        for (int l = 0; l <= l_max; ++l)
        {
            const double ref = boost::math::sph_bessel(static_cast<unsigned>(l), x);
            const double tol = 1e-12 * std::max(std::fabs(ref), 1e-3 / (1 + l)) + 1e-300;
            EXPECT_NEAR(v[l], ref, std::max(tol, 1e-10 * std::fabs(ref))) << "l=" << l << " x=" << x;
        }
    }
}

TEST(Bessel, DeepUnderflowRegionStaysFiniteAndAccurate)
{
    const auto v = spherical_bessel_all(60, 2.0);
    for (int l = 0; l <= 60; ++l)
    {
        ASSERT_TRUE(std::isfinite(v[l]));
        const double ref = boost::math::sph_bessel(static_cast<unsigned>(l), 2.0);
        EXPECT_NEAR(v[l] / ref, 1.0, 1e-10) << l;
    }
}

TEST(Bessel, SumRule)
{
    for (double x : {0.7, 6.0, 18.6, 40.0})
    {
        // sum_l (2l+1) j_l^2 = 1, converged once l_max >> x.
        const auto v = spherical_bessel_all(static_cast<int>(x) + 60, x);
        long double s = 0;
        for (std::size_t l = 0; l < v.size(); ++l)
            s += (2.0L * l + 1) * v[l] * v[l];
        EXPECT_NEAR(static_cast<double>(s), 1.0, 1e-12) << x;
    }
}

TEST(Bessel, SingleOrderAndErrors)
{
    EXPECT_NEAR(spherical_bessel(0, 2.0), std::sin(2.0) / 2.0, 1e-15);
    EXPECT_THROW(spherical_bessel_all(3, -1.0), DomainError);
    EXPECT_THROW(spherical_bessel_all(-1, 1.0), DomainError);
}
