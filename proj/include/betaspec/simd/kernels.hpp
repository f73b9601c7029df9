#pragma once

//---------------------------------------------------------------------------//
// Data-parallel inner loops: spectral line sums over the FSS and the
// discrete correlation used by the Gaussian response.
//
// Each kernel exists as a scalar reference and, on x86-64, an AVX2+FMA
// variant. The public entry points dispatch on the instruction set chosen at
// startup; the per-ISA tables are exposed for equivalence tests.
//
// Gate convention shared by the line sums, with e_n = epsilon - E_n:
//   m2 >= 0 : open iff e_n > sqrt(m2)
//   m2 <  0 : open iff e_n > 0
// and the radicand e_n^2 - m2 is clamped at zero.
//---------------------------------------------------------------------------//

#include <cstddef>
#include <span>
#include <string_view>

namespace betaspec::simd {

enum class Isa
{
    scalar,
    avx2
};

std::string_view to_string(Isa isa);
bool isa_supported(Isa isa);

//! ISA used by the dispatching entry points. Defaults to the best supported
//! one; BETASPEC_SIMD=scalar in the environment forces the reference path.
Isa active_isa();
//! Throws ConfigError when the ISA is not supported on this CPU.
void set_active_isa(Isa isa);

struct KernelTable
{
    //! sum P_n (e_n^2 - m2)^{3/2} over open lines
    double (*integral_sum)(const double* energies, const double* probs, std::size_t n, double epsilon,
                           double m2);
    //! sum P_n e_n (e_n^2 - m2)^{1/2} over open lines
    double (*differential_sum)(const double* energies, const double* probs, std::size_t n, double epsilon,
                               double m2);
    //! sum P_n [e_n^3 - 3/2 m2 e_n] over e_n > 0
    double (*linear_sum)(const double* energies, const double* probs, std::size_t n, double epsilon,
                         double m2);
    double (*dot)(const double* a, const double* b, std::size_t n);
    //! out[i] = sum_k w[k] v[i + k], i < n_out; v holds n_out + n_w - 1 values
    void (*correlate)(const double* v, const double* w, std::size_t n_w, double* out, std::size_t n_out);
};

const KernelTable& scalar_kernels();
//! Null when the library was built without AVX2 support.
const KernelTable* avx2_kernels();
const KernelTable& kernels_for(Isa isa);

//---------------------------------------------------------------------------//
// Dispatching wrappers
double integral_sum(std::span<const double> energies, std::span<const double> probs, double epsilon, double m2);
double differential_sum(std::span<const double> energies, std::span<const double> probs, double epsilon,
                        double m2);
double linear_sum(std::span<const double> energies, std::span<const double> probs, double epsilon, double m2);
double dot(std::span<const double> a, std::span<const double> b);
void correlate(std::span<const double> values, std::span<const double> weights, std::span<double> out);

}  // namespace betaspec::simd
