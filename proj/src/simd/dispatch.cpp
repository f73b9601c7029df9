#include <atomic>
#include <cstdlib>
#include <string>

#include "betaspec/error.hpp"
#include "betaspec/simd/kernels.hpp"

namespace betaspec::simd {

#ifndef BETASPEC_HAVE_AVX2
const KernelTable* avx2_kernels()
{
    return nullptr;
}
#endif

std::string_view to_string(Isa isa)
{
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

bool isa_supported(Isa isa)
{
    switch (isa)
    {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(BETASPEC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
            return avx2_kernels() != nullptr && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

namespace {

Isa initial_isa()
{
    if (const char* env = std::getenv("BETASPEC_SIMD"); env && std::string(env) == "scalar")
        return Isa::scalar;
    return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current()
{
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

}  // namespace

Isa active_isa()
{
    return current().load(std::memory_order_relaxed);
}

void set_active_isa(Isa isa)
{
    if (!isa_supported(isa))
        throw ConfigError("instruction set '" + std::string(to_string(isa)) + "' not supported here");
    current().store(isa, std::memory_order_relaxed);
}

const KernelTable& kernels_for(Isa isa)
{
    if (isa == Isa::avx2 && isa_supported(Isa::avx2))
        return *avx2_kernels();
    return scalar_kernels();
}

namespace {
const KernelTable& active()
{
    return kernels_for(active_isa());
}
}  // namespace

double integral_sum(std::span<const double> energies, std::span<const double> probs, double epsilon, double m2)
{
    return active().integral_sum(energies.data(), probs.data(), energies.size(), epsilon, m2);
}

double differential_sum(std::span<const double> energies, std::span<const double> probs, double epsilon,
                        double m2)
{
    return active().differential_sum(energies.data(), probs.data(), energies.size(), epsilon, m2);
}

double linear_sum(std::span<const double> energies, std::span<const double> probs, double epsilon, double m2)
{
    return active().linear_sum(energies.data(), probs.data(), energies.size(), epsilon, m2);
}

double dot(std::span<const double> a, std::span<const double> b)
{
    return active().dot(a.data(), b.data(), a.size());
}

void correlate(std::span<const double> values, std::span<const double> weights, std::span<double> out)
{
    if (out.empty())
        return;
    if (values.size() + 1 < out.size() + weights.size())
        throw ConfigError("correlate: value buffer shorter than output + kernel - 1");
    active().correlate(values.data(), weights.data(), weights.size(), out.data(), out.size());
}

}  // namespace betaspec::simd
