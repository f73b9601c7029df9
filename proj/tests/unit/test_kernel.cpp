#include <cmath>
#include <random>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <gtest/gtest.h>

#include "betaspec/error.hpp"
#include "betaspec/kernel.hpp"
#include "betaspec/physics.hpp"

using namespace betaspec;
using mp50 = boost::multiprecision::cpp_dec_float_50;

namespace {

FinalStateSpectrum single_line(double energy = 0, double probability = 1)
{
    return FinalStateSpectrum::from_lines({FssLine{energy, probability, 0, 0, 0}});
}

FinalStateSpectrum sample_fss()
{
    return FinalStateSpectrum::from_lines({
        FssLine{0.0, 0.30, 0, 0, 0},
        FssLine{0.4, 0.20, 0, 1, 0},
        FssLine{1.7, 0.07, 0, 2, 1},
        FssLine{12.0, 0.15, 1, {}, {}},
        FssLine{27.5, 0.18, 1, {}, {}},
        FssLine{80.0, 0.10, 2, {}, {}},
    });
}

SpectrumParams params(double m2 = 0)
{
    SpectrumParams p;
    p.m2_ev2 = m2;
    return p;
}

}  // namespace

TEST(KernelForms, SingleLineClosedForms)
{
    const auto fss = single_line();
    const auto p = params();
    for (double d : {1.0, 10.0, 150.0})
    {
        const double eps = p.endpoint_ev - d;
        const double pref = phase_space_prefactor(eps, 2);
        EXPECT_NEAR(integral_spectrum(eps, p, fss) / (pref * d * d * d / 3), 1, 1e-14);
        EXPECT_NEAR(differential_spectrum(eps, p, fss) / (pref * d * d), 1, 1e-14);
    }
    const auto massive = params(4.0);
    const double eps = massive.endpoint_ev - 5;
    EXPECT_NEAR(integral_spectrum(eps, massive, fss) / phase_space_prefactor(eps, 2), std::pow(21.0, 1.5) / 3, 1e-11);
    EXPECT_NEAR(differential_spectrum(eps, massive, fss) / phase_space_prefactor(eps, 2), 5 * std::sqrt(21.0),
                1e-11);
}

TEST(KernelForms, ThresholdBehaviour)
{
    const auto fss = single_line(1.0, 1.0);
    EXPECT_EQ(integral_line_sum(fss, 2.0, 4.0), 0);
    EXPECT_EQ(integral_line_sum(fss, 3.0, 4.0), 0);
    EXPECT_GT(integral_line_sum(fss, 3.001, 4.0), 0);
    EXPECT_EQ(differential_line_sum(fss, 3.0, 4.0), 0);
    // Negative m2: a line opens as soon as e_n > 0.
    EXPECT_EQ(integral_line_sum(fss, 0.999, -4.0), 0);
    EXPECT_NEAR(integral_line_sum(fss, 1.1, -4.0), std::pow(0.01 + 4.0, 1.5), 1e-12);
    EXPECT_EQ(linearized_line_sum(fss, 1.0, 0.0), 0);
}

TEST(KernelForms, DerivativeOfIntegralIsDifferential)
{
    const auto fss = sample_fss();
    const double h = 1e-4;
    for (double m2 : {0.0, 2.0, -3.0})
    {
        for (double e : {5.0, 20.0, 90.0, 300.0})
        {
            const double fd = (integral_line_sum(fss, e + h, m2) - integral_line_sum(fss, e - h, m2)) / (2 * h) / 3;
            const double d = differential_line_sum(fss, e, m2);
            EXPECT_NEAR(fd / d, 1, 1e-6) << "m2=" << m2 << " e=" << e;
        }
    }
}

TEST(KernelForms, HighPrecisionOracle)
{
    const auto fss = sample_fss();
    const auto p = params(1.5);
    const double eps = p.endpoint_ev - 300;
    mp50 sum = 0;
    for (const auto& l : fss.lines())
    {
        const mp50 e = mp50(p.endpoint_ev) - mp50(eps) - mp50(l.energy_ev);
        const mp50 arg = e * e - mp50(p.m2_ev2);
        sum += mp50(l.probability) * arg * sqrt(arg);
    }
    const double expected = static_cast<double>(sum / 3) * phase_space_prefactor(eps, 2);
    EXPECT_NEAR(integral_spectrum(eps, p, fss) / expected, 1, 1e-10);
}

TEST(KernelForms, LinearizedMatchesIntegralAtZeroMass)
{
    const auto fss = sample_fss();
    for (double e : {0.2, 3.0, 50.0, 250.0})
        EXPECT_NEAR(linearized_line_sum(fss, e, 0) / integral_line_sum(fss, e, 0), 1, 1e-12);
}

TEST(KernelForms, LinearizedMatchesMomentForm)
{
    const auto fss = sample_fss();
    for (double m2 : {0.0, 1.0, -2.0})
    {
        for (double d : {0.5, 2.0, 13.0, 30.0, 100.0, 400.0})
        {
            const auto p = params(m2);
            const double eps = p.endpoint_ev - d;
            const double lin = linearized_spectrum(eps, p, fss);
            const double mom = moment_spectrum(eps, p, fss);
            EXPECT_NEAR(mom, lin, 1e-10 * std::fabs(lin) + 1e-300) << m2 << " " << d;
        }
    }
}

TEST(KernelForms, LinearizedApproachesIntegralWellAboveMass)
{
    const auto fss = single_line();
    const double m2 = 1.0;
    for (double e : {10.0, 100.0})
    {
        const double diff = integral_line_sum(fss, e, m2) - linearized_line_sum(fss, e, m2);
        const double leading = 3.0 / 8.0 * m2 * m2 / e;
        EXPECT_NEAR(diff / leading, 1, 0.02) << e;
    }
}

TEST(KernelSupport, VanishesPastEndpoint)
{
    const auto fss = sample_fss();
    const auto p = params();
    for (auto f : {SpectrumForm::integral, SpectrumForm::differential, SpectrumForm::linearized, SpectrumForm::moment})
    {
        EXPECT_EQ(evaluate_spectrum(f, p.endpoint_ev, p, fss), 0);
        EXPECT_EQ(evaluate_spectrum(f, p.endpoint_ev + 3, p, fss), 0);
        EXPECT_GT(evaluate_spectrum(f, p.endpoint_ev - 0.01, p, fss), 0);
    }
}

TEST(KernelSupport, EffectiveEndpoint)
{
    const double w0 = 18575;
    EXPECT_EQ(effective_endpoint(w0, w0), w0);
    EXPECT_NEAR(w0 - effective_endpoint(w0 - 200, w0), 0.036384, 1e-6);
    EXPECT_NEAR(w0 - effective_endpoint(w0 - 100, w0), 0.018192, 1e-6);
    SpectrumParams p;
    p.endpoint_drift = true;
    EXPECT_NEAR(available_energy(w0 - 200, p), 200 - 0.036384, 1e-6);
    p.endpoint_drift = false;
    EXPECT_EQ(available_energy(w0 - 200, p), 200);
}

TEST(KernelSupport, DriftRescalesTheSpectrum)
{
    const auto fss = single_line();
    SpectrumParams plain = params();
    SpectrumParams drift = plain;
    drift.endpoint_drift = true;
    const double mt = constants().triton_mass_ratio;
    for (double d : {100.0, 200.0, 400.0})
    {
        const double eps = plain.endpoint_ev - d;
        const double ratio = integral_spectrum(eps, drift, fss) / integral_spectrum(eps, plain, fss);
        EXPECT_NEAR(ratio, std::pow(1 - 1 / mt, 3), 1e-12);
        EXPECT_NEAR((1 - ratio) / 5.46e-4, 1, 1e-3);
    }
}

TEST(KernelSupport, PrefactorWithoutCoulomb)
{
    const auto k = kinematics(18000);
    EXPECT_NEAR(phase_space_prefactor(18000, 0), k.total_ev * k.momentum.pc_ev, 1e-6);
    EXPECT_GT(phase_space_prefactor(18000, 2), phase_space_prefactor(18000, 0));
}

TEST(KernelProperties, NonNegativeOnRandomInputs)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 50; ++trial)
    {
        std::vector<FssLine> lines;
        double left = 1;
        for (int i = 0; i < 20; ++i)
        {
            const double pr = left * u(rng) * 0.3;
            left -= pr;
            lines.push_back({100 * u(rng), pr, 0, {}, {}});
        }
        const auto fss = FinalStateSpectrum::from_lines(lines);
        const auto p = params(-50 + 100 * u(rng));
        for (int k = 0; k < 40; ++k)
        {
            const double eps = p.endpoint_ev - 300 * u(rng);
            for (auto f : {SpectrumForm::integral, SpectrumForm::differential})
                EXPECT_GE(evaluate_spectrum(f, eps, p, fss), 0);
        }
    }
}

TEST(KernelProperties, AdditiveOverLines)
{
    const auto all = sample_fss();
    std::vector<FssLine> a(all.lines().begin(), all.lines().begin() + 3);
    std::vector<FssLine> b(all.lines().begin() + 3, all.lines().end());
    const auto fa = FinalStateSpectrum::from_lines(a);
    const auto fb = FinalStateSpectrum::from_lines(b);
    for (double e : {1.0, 20.0, 200.0})
    {
        for (double m2 : {0.0, 0.5})
        {
            EXPECT_NEAR(integral_line_sum(all, e, m2), integral_line_sum(fa, e, m2) + integral_line_sum(fb, e, m2),
                        1e-12 * integral_line_sum(all, e, m2));
            EXPECT_NEAR(differential_line_sum(all, e, m2),
                        differential_line_sum(fa, e, m2) + differential_line_sum(fb, e, m2),
                        1e-12 * differential_line_sum(all, e, m2));
        }
    }
}

TEST(KernelProperties, LinearInAmplitude)
{
    const auto fss = sample_fss();
    auto p = params(0.3);
    const double eps = p.endpoint_ev - 40;
    const double base = integral_spectrum(eps, p, fss);
    p.amplitude = 7.25;
    EXPECT_NEAR(integral_spectrum(eps, p, fss) / base, 7.25, 1e-14);
}

TEST(KernelProperties, GridEvaluationIndependentOfJobs)
{
    const auto fss = sample_fss();
    const auto p = params(0.7);
    std::vector<double> grid;
    for (int i = 0; i < 500; ++i)
        grid.push_back(p.endpoint_ev - 400 + i);
    const auto one = spectrum_on_grid(SpectrumForm::integral, grid, p, fss, 1);
    const auto four = spectrum_on_grid(SpectrumForm::integral, grid, p, fss, 4);
    EXPECT_EQ(one, four);
    for (std::size_t i = 0; i < grid.size(); i += 37)
        EXPECT_EQ(one[i], integral_spectrum(grid[i], p, fss));
}

TEST(KernelConfig, ParameterValidation)
{
    SpectrumParams p;
    EXPECT_NO_THROW(p.validate());
    p.amplitude = 0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.endpoint_ev = 17000;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.m2_ev2 = 2e4;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.background = -1;
    EXPECT_THROW(p.validate(), ConfigError);
    EXPECT_THROW(parse_spectrum_form("cubic"), ConfigError);
    for (auto f : {SpectrumForm::integral, SpectrumForm::differential, SpectrumForm::linearized, SpectrumForm::moment})
        EXPECT_EQ(parse_spectrum_form(to_string(f)), f);
}

TEST(UniformShifts, RecoilAndInitialRotation)
{
    const double eps = 18400;
    const auto zero = uniform_shifts(Species::t2, 0, 1.4, eps);
    EXPECT_EQ(zero.initial_rotation_ev, 0);
    EXPECT_EQ(zero.recoil_ev, recoil_parts(eps, Species::t2).rotational_ev);
    const auto& c = constants();
    const auto one = uniform_shifts(Species::t2, 1, 1.4, eps);
    EXPECT_NEAR(one.initial_rotation_ev, 2.25 / (2 * c.reduced_t_he3() * 1.96) * c.hartree_ev, 1e-15);
    const auto th = uniform_shifts(Species::th, 1, 1.4, eps);
    EXPECT_NEAR(th.initial_rotation_ev, 2.25 / (2 * c.reduced_he3_p() * 1.96) * c.hartree_ev, 1e-15);
    EXPECT_NEAR(th.total(), th.recoil_ev + th.initial_rotation_ev, 1e-15);
    EXPECT_THROW(uniform_shifts(Species::t2, -1, 1.4, eps), DomainError);
    EXPECT_THROW(uniform_shifts(Species::t2, 1, 0, eps), DomainError);
}
