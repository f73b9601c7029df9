#include <cmath>

#include <immintrin.h>

#include "betaspec/simd/kernels.hpp"

namespace betaspec::simd {

namespace {

// Horizontal sum of four lanes.
inline double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double gate_threshold(double m2)
{
    return m2 > 0 ? std::sqrt(m2) : 0.0;
}

// Processes 8 lines per iteration with two accumulators, then a scalar tail
// identical to the reference kernel.
double integral_sum(const double* energies, const double* probs, std::size_t n, double epsilon, double m2)
{
    const double gate = gate_threshold(m2);
    const __m256d veps = _mm256_set1_pd(epsilon);
    const __m256d vgate = _mm256_set1_pd(gate);
    const __m256d vm2 = _mm256_set1_pd(m2);
    const __m256d zero = _mm256_setzero_pd();
    __m256d acc0 = zero, acc1 = zero;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
    {
        const __m256d e0 = _mm256_sub_pd(veps, _mm256_loadu_pd(energies + i));
        const __m256d e1 = _mm256_sub_pd(veps, _mm256_loadu_pd(energies + i + 4));
        const __m256d r0 = _mm256_max_pd(_mm256_fmsub_pd(e0, e0, vm2), zero);
        const __m256d r1 = _mm256_max_pd(_mm256_fmsub_pd(e1, e1, vm2), zero);
        const __m256d t0 = _mm256_mul_pd(_mm256_loadu_pd(probs + i), _mm256_mul_pd(r0, _mm256_sqrt_pd(r0)));
        const __m256d t1 = _mm256_mul_pd(_mm256_loadu_pd(probs + i + 4), _mm256_mul_pd(r1, _mm256_sqrt_pd(r1)));
        acc0 = _mm256_add_pd(acc0, _mm256_and_pd(_mm256_cmp_pd(e0, vgate, _CMP_GT_OQ), t0));
        acc1 = _mm256_add_pd(acc1, _mm256_and_pd(_mm256_cmp_pd(e1, vgate, _CMP_GT_OQ), t1));
    }
    double sum = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
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
    const __m256d veps = _mm256_set1_pd(epsilon);
    const __m256d vgate = _mm256_set1_pd(gate);
    const __m256d vm2 = _mm256_set1_pd(m2);
    const __m256d zero = _mm256_setzero_pd();
    __m256d acc0 = zero, acc1 = zero;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
    {
        const __m256d e0 = _mm256_sub_pd(veps, _mm256_loadu_pd(energies + i));
        const __m256d e1 = _mm256_sub_pd(veps, _mm256_loadu_pd(energies + i + 4));
        const __m256d s0 = _mm256_sqrt_pd(_mm256_max_pd(_mm256_fmsub_pd(e0, e0, vm2), zero));
        const __m256d s1 = _mm256_sqrt_pd(_mm256_max_pd(_mm256_fmsub_pd(e1, e1, vm2), zero));
        const __m256d t0 = _mm256_mul_pd(_mm256_loadu_pd(probs + i), _mm256_mul_pd(e0, s0));
        const __m256d t1 = _mm256_mul_pd(_mm256_loadu_pd(probs + i + 4), _mm256_mul_pd(e1, s1));
        acc0 = _mm256_add_pd(acc0, _mm256_and_pd(_mm256_cmp_pd(e0, vgate, _CMP_GT_OQ), t0));
        acc1 = _mm256_add_pd(acc1, _mm256_and_pd(_mm256_cmp_pd(e1, vgate, _CMP_GT_OQ), t1));
    }
    double sum = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
    {
        const double e = epsilon - energies[i];
        if (e > gate)
            sum += probs[i] * e * std::sqrt(std::fmax(e * e - m2, 0.0));
    }
    return sum;
}

double linear_sum(const double* energies, const double* probs, std::size_t n, double epsilon, double m2)
{
    const __m256d veps = _mm256_set1_pd(epsilon);
    const __m256d vlin = _mm256_set1_pd(1.5 * m2);
    const __m256d zero = _mm256_setzero_pd();
    __m256d acc0 = zero, acc1 = zero;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
    {
        const __m256d e0 = _mm256_sub_pd(veps, _mm256_loadu_pd(energies + i));
        const __m256d e1 = _mm256_sub_pd(veps, _mm256_loadu_pd(energies + i + 4));
        const __m256d t0 = _mm256_mul_pd(_mm256_loadu_pd(probs + i), _mm256_mul_pd(e0, _mm256_fmsub_pd(e0, e0, vlin)));
        const __m256d t1
            = _mm256_mul_pd(_mm256_loadu_pd(probs + i + 4), _mm256_mul_pd(e1, _mm256_fmsub_pd(e1, e1, vlin)));
        acc0 = _mm256_add_pd(acc0, _mm256_and_pd(_mm256_cmp_pd(e0, zero, _CMP_GT_OQ), t0));
        acc1 = _mm256_add_pd(acc1, _mm256_and_pd(_mm256_cmp_pd(e1, zero, _CMP_GT_OQ), t1));
    }
    double sum = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
    {
        const double e = epsilon - energies[i];
        if (e > 0)
            sum += probs[i] * e * (e * e - 1.5 * m2);
    }
    return sum;
}

double dot(const double* a, const double* b, std::size_t n)
{
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
    {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    double sum = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        sum += a[i] * b[i];
    return sum;
}

void correlate(const double* v, const double* w, std::size_t n_w, double* out, std::size_t n_out)
{
    for (std::size_t i = 0; i < n_out; ++i)
        out[i] = dot(v + i, w, n_w);
}

}  // namespace

const KernelTable* avx2_kernels()
{
    static const KernelTable table{integral_sum, differential_sum, linear_sum, dot, correlate};
    return &table;
}

}  // namespace betaspec::simd
