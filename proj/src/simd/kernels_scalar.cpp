#include <cmath>

#include "betaspec/simd/kernels.hpp"

namespace betaspec::simd {

namespace {

double gate_threshold(double m2)
{
    return m2 > 0 ? std::sqrt(m2) : 0.0;
}

double integral_sum(const double* energies, const double* probs, std::size_t n, double epsilon, double m2)
{
    const double gate = gate_threshold(m2);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const double e = epsilon - energies[i];
        if (e > gate)
        {
            const double rad = std::fmax(e * e - m2, 0.0);
            sum += probs[i] * rad * std::sqrt(rad);
        }
    }
    return sum;
}

double differential_sum(const double* energies, const double* probs, std::size_t n, double epsilon, double m2)
{
    const double gate = gate_threshold(m2);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const double e = epsilon - energies[i];
        if (e > gate)
            sum += probs[i] * e * std::sqrt(std::fmax(e * e - m2, 0.0));
    }
    return sum;
}

double linear_sum(const double* energies, const double* probs, std::size_t n, double epsilon, double m2)
{
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const double e = epsilon - energies[i];
        if (e > 0)
            sum += probs[i] * e * (e * e - 1.5 * m2);
    }
    return sum;
}

double dot(const double* a, const double* b, std::size_t n)
{
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i)
        sum += a[i] * b[i];
    return sum;
}

void correlate(const double* v, const double* w, std::size_t n_w, double* out, std::size_t n_out)
{
    for (std::size_t i = 0; i < n_out; ++i)
        out[i] = dot(v + i, w, n_w);
}

}  // namespace

const KernelTable& scalar_kernels()
{
    static const KernelTable table{integral_sum, differential_sum, linear_sum, dot, correlate};
    return table;
}

}  // namespace betaspec::simd
