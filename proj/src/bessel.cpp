#include "betaspec/bessel.hpp"

#include <algorithm>
#include <cmath>

#include "betaspec/error.hpp"

namespace betaspec {

void spherical_bessel_all(double x, std::span<double> out)
{
    if (out.empty())
        return;
    if (!(x >= 0))
        throw DomainError("spherical Bessel functions need x >= 0");
    const int l_max = static_cast<int>(out.size()) - 1;
    std::fill(out.begin(), out.end(), 0.0);
    if (x == 0)
    {
        out[0] = 1;
        return;
    }
    if (x < 1e-3)
    {
        // Leading series terms; j_l(x) ~ x^l / (2l+1)!! (1 - x^2 / (2(2l+3))).
        double term = 1;
        for (int l = 0; l <= l_max; ++l)
        {
            out[l] = term * (1 - x * x / (2.0 * (2 * l + 3)));
            term *= x / (2 * l + 3);
            if (term < 1e-300)
                break;
        }
        return;
    }

    if (x > l_max)
    {
        out[0] = std::sin(x) / x;
        if (l_max >= 1)
            out[1] = std::sin(x) / (x * x) - std::cos(x) / x;
        for (int l = 1; l < l_max; ++l)
            out[l + 1] = (2 * l + 1) / x * out[l] - out[l - 1];
        return;
    }

    // Miller: start well above both l_max and x, where j_l is negligible.
    const int start = l_max + static_cast<int>(x) + 16 + static_cast<int>(std::sqrt(40.0 * (l_max + x)));
    double upper = 0;
    double current = 1e-300;
    long double norm = 0;
    for (int l = start; l >= 0; --l)
    {
        if (l <= l_max)
            out[l] = current;
        norm += static_cast<long double>(2 * l + 1) * current * current;
        const double lower = (2 * l + 1) / x * current - upper;
        upper = current;
        current = lower;
        if (std::fabs(current) > 1e100)
        {
            const double s = 1e-100;
            current *= s;
            upper *= s;
            norm *= static_cast<long double>(s) * s;
            for (int k = std::max(l - 1, 0); k <= l_max; ++k)
                out[k] *= s;
        }
    }
    const auto scale = static_cast<double>(1.0L / std::sqrt(norm));
    // Fix the overall sign against j_0 where it is well conditioned.
    double sign = 1;
    const double j0 = std::sin(x) / x;
    if (std::fabs(j0) > 1e-3)
        sign = (j0 * out[0] >= 0) ? 1.0 : -1.0;
    else
    {
        const double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
        if (l_max >= 1)
            sign = (j1 * out[1] >= 0) ? 1.0 : -1.0;
        else
            sign = (j0 * out[0] >= 0) ? 1.0 : -1.0;
    }
    for (auto& v : out)
        v *= sign * scale;
}

std::vector<double> spherical_bessel_all(int l_max, double x)
{
    if (l_max < 0)
        throw DomainError("l_max must be non-negative");
    std::vector<double> out(l_max + 1);
    spherical_bessel_all(x, out);
    return out;
}

double spherical_bessel(int l, double x)
{
    return spherical_bessel_all(l, x).back();
}

}  // namespace betaspec
