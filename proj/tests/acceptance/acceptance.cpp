#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "betaspec/bias.hpp"
#include "betaspec/fit.hpp"
#include "betaspec/franck_condon.hpp"
#include "betaspec/kernel.hpp"
#include "betaspec/physics.hpp"
#include "betaspec/response.hpp"
#include "betaspec/simd/kernels.hpp"

using namespace betaspec;

namespace {

constexpr double physical_q = 18.6;
int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail)
{
    if (!pass)
        ++failures;
    fmt::print("{} {:>2} {}: {}\n", pass ? "PASS" : "FAIL", id, what, detail);
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FinalStateSpectrum channel_only(const FinalStateSpectrum& fss, int channel)
{
    std::vector<FssLine> lines;
    for (const auto& l : fss.lines())
    {
        if (l.channel == channel)
            lines.push_back(l);
    }
    return FinalStateSpectrum::from_lines(std::move(lines));
}

FinalStateSpectrum pruned(const FinalStateSpectrum& fss, double floor)
{
    std::vector<FssLine> lines;
    for (const auto& l : fss.lines())
    {
        if (l.probability >= floor)
            lines.push_back(l);
    }
    return FinalStateSpectrum::from_lines(std::move(lines));
}

FinalStateSpectrum random_fss(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> energy(0, 60);
    std::uniform_real_distribution<double> weight(0, 1);
    std::vector<FssLine> lines(1 + rng() % 40);
    double total = 0;
    for (auto& l : lines)
    {
        l.energy_ev = energy(rng);
        l.probability = weight(rng);
        l.channel = static_cast<int>(rng() % 3);
        total += l.probability;
    }
    for (auto& l : lines)
        l.probability /= total * 1.0000001;
    return FinalStateSpectrum::from_lines(std::move(lines));
}

}  // namespace

int main()
{
    const auto& c = constants();
    fmt::print("kernels: {}, constants: {}\n", simd::to_string(simd::active_isa()), c.version);

    // 1. Rotational recoil shift with the T-3He reduced mass.
    {
        const double shift = rotational_recoil_shift(physical_q, c.reduced_t_he3());
        report(1, std::fabs(shift / 1.72 - 1) <= 0.02, "rotational recoil shift",
               fmt::format("q^2/2M = {:.5f} eV at q = {} a.u. (target 1.72 eV +- 2 %)", shift, physical_q));
    }

    // 2. Endpoint drift 200 eV below the endpoint.
    {
        const double w0 = 18575;
        const double drift = w0 - effective_endpoint(w0 - 200, w0);
        report(2, drift >= 0.036 && drift <= 0.040, "endpoint drift",
               fmt::format("dW0 = {:.6f} eV at 200 eV below W0 (target [0.036, 0.040])", drift));
    }

    FranckCondonSolver solver(default_t2_model());
    GenerationOptions full_opts;
    full_opts.j_max = 60;

    // 3. Mean rotational excitation of the ground channel.
    {
        const auto t0 = std::chrono::steady_clock::now();
        GenerationOptions o = full_opts;
        o.v_max = 30;
        const auto g = solver.generate(physical_q, o);
        const double j = mean_rotation(g.fss, 0);
        const double t = seconds_since(t0);
        report(3, j >= 22 && j <= 25 && t <= 60, "mean rotational excitation",
               fmt::format("<J> = {:.4f} for J <= 60, v <= 30 (target [22, 25]); {:.1f} s", j, t));
    }

    const auto t_full = std::chrono::steady_clock::now();
    const auto full = solver.generate(physical_q, full_opts);
    const double full_seconds = seconds_since(t_full);
    const auto ground = channel_only(full.fss, 0);

    // 4. Vibrational hierarchy of the pseudo-spectrum.
    {
        const auto ps = pseudo_spectrum(solver, physical_q, 0);
        bool decreasing = true;
        for (int v = 1; v <= 3; ++v)
            decreasing = decreasing && ps.weights[v] < ps.weights[v - 1];
        const double share = ps.weights[0] / ps.channel_weight;
        const double share_target = 0.522 / 0.574;
        const double ratio = ps.weights[0] / ps.weights[1];
        const double ratio_target = 52.2 / 4.62;
        const bool pass = decreasing && share >= share_target / 2 && share <= share_target * 2
                          && ratio >= ratio_target / 2 && ratio <= ratio_target * 2;
        report(4, pass, "vibrational hierarchy",
               fmt::format("P(v=0..3) = {:.5f} {:.5f} {:.5f} {:.5f}; v=0 share {:.4f} (target {:.4f}, x2 band); "
                           "v0/v1 {:.3f} (target {:.3f}, x2 band)",
                           ps.weights[0], ps.weights[1], ps.weights[2], ps.weights[3], share, share_target,
                           ratio, ratio_target));
    }

    // 5. First moment from the operator form against the full spectrum.
    {
        const double eps = 1e6;
        const auto op = operator_moments(solver, physical_q, eps, 0);
        const auto direct = cumulative_moments(ground, eps);
        const double rel = std::fabs(op.moments->mean / direct.moments->mean - 1);
        report(5, rel <= 0.01, "operator first moment",
               fmt::format("<E> operator {:.6f} eV, full spectrum {:.6f} eV, rel. diff {:.2e} (target <= 1 %); "
                           "full spectrum {} lines in {:.1f} s",
                           op.moments->mean, direct.moments->mean, rel, full.fss.size(), full_seconds));
    }

    // 6. Commutator term bound.
    {
        const double left = c_term_expectation(solver, physical_q, 0, CommutatorOrder::derivative_left);
        const double right = c_term_expectation(solver, physical_q, 0, CommutatorOrder::derivative_right);
        report(6, std::fabs(left) <= 0.1, "commutator term bound",
               fmt::format("<C> = {:.5f} eV^3 (target |<C>| <= 0.1); mirrored operator order gives {:.5f}", left,
                           right));
    }

    // 7. Linearization error trend.
    {
        std::vector<double> depths;
        for (int d = 2; d <= 300; ++d)
            depths.push_back(d);
        const auto st = fig2_study(full.fss, 1.0, depths);
        std::vector<double> offset;
        for (int d = 2; d < 300; ++d)
            offset.push_back(d + 0.5);
        const auto held = fig2_study(full.fss, 1.0, offset);
        const bool pass = std::isfinite(st.envelope_constant) && st.envelope_constant > 0
                          && st.bounded_by(st.envelope_constant);
        report(7, pass, "linearization error trend",
               fmt::format("C = {:.4f} bounds |exact - linear| at all {} points of 2:300:1 eV (m = 1 eV); "
                           "least-squares C {:.4f}; half-step grid needs C = {:.4f}",
                           st.envelope_constant, st.rows.size(), st.fitted_constant, held.envelope_constant));
    }

    // 8. Moment form against the direct line sum.
    {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> eps_dist(0, 300);
        std::uniform_real_distribution<double> m2_dist(-4, 4);
        double worst = 0;
        int checked = 0, exact_zero = 0;
        bool zero_ok = true;
        for (int k = 0; k < 1000; ++k)
        {
            const auto fss = random_fss(rng);
            const double eps = eps_dist(rng);
            const double m2 = k % 4 == 0 ? 0.0 : m2_dist(rng);
            const double direct = linearized_line_sum(fss, eps, m2);
            const double moment = moment_form_spectrum_term(fss, eps, m2);
            if (direct == 0)
            {
                zero_ok = zero_ok && moment == 0;
                ++exact_zero;
                continue;
            }
            worst = std::max(worst, std::fabs(moment - direct) / std::fabs(direct));
            ++checked;
        }
        report(8, zero_ok && worst <= 1e-10, "moment-form identity",
               fmt::format("max rel. diff {:.2e} over {} instances, {} closed (target 1e-10)", worst, checked,
                           exact_zero));
    }

    // 9. Sum rule over recoil momenta.
    {
        double worst = 0;
        std::string per_q;
        for (double q : {0.0, 5.0, 10.0, 18.6, 25.0})
        {
            const auto g = q == physical_q ? full : solver.generate(q, full_opts);
            double local = 0;
            for (const auto& ch : g.channels)
                local = std::max(local, std::fabs(ch.captured / ch.weight - 1));
            worst = std::max(worst, local);
            per_q += fmt::format(" q={}:{:.1e}", q, local);
        }
        report(9, worst <= 0.01, "sum rule",
               fmt::format("max |sum P / w_c - 1| = {:.2e} (target <= 1 %);{}", worst, per_q));
    }

    const auto lean = pruned(full.fss, 1e-9);

    // 11. Zero-noise recovery.
    {
        SpectrumParams truth;
        truth.background = 10;
        std::vector<double> centers;
        for (double x = truth.endpoint_ev - 200; x <= truth.endpoint_ev + 20; x += 1)
            centers.push_back(x);
        const double exposure = 1e-11;
        const auto data = asimov_dataset(truth, lean, ResponseModel{}, centers, exposure);
        FitConfig cfg;
        cfg.window_lo_ev = truth.endpoint_ev - 200;
        cfg.window_hi_ev = truth.endpoint_ev + 20;
        cfg.initial = truth;
        cfg.initial.amplitude = exposure * 1.03;
        cfg.initial.endpoint_ev += 0.8;
        cfg.initial.m2_ev2 = 3;
        cfg.initial.background = 13;
        const auto r = minimize(data, cfg, lean);
        const double dm2 = std::fabs(r.params.m2_ev2 - truth.m2_ev2);
        const double dw0 = std::fabs(r.params.endpoint_ev - truth.endpoint_ev);
        report(11, r.converged && dm2 < 1e-3 && dw0 < 1e-4, "zero-noise recovery",
               fmt::format("|dm2| = {:.2e} eV^2, |dW0| = {:.2e} eV after {} iterations ({})", dm2, dw0,
                           r.iterations, r.status));
    }

    // 10. Fitted-m2 bias from the endpoint drift.
    {
        const auto t0 = std::chrono::steady_clock::now();
        ScanSpec spec;
        spec.depths_ev = {100, 200, 400};
        spec.replications = 100;
        spec.truth.background = 10;
        spec.exposure = 1e-11;
        spec.jobs = 0;
        const auto scan = bias_scan(spec, lean);
        bool negative = true, control_ok = true, flagged = false;
        double at200 = 0;
        std::string detail;
        for (const auto& row : scan.rows)
        {
            flagged = flagged || row.flagged;
            if (row.scenario == "mismatch")
            {
                negative = negative && row.mean_m2 < 0;
                if (row.depth_ev == 200)
                    at200 = row.mean_m2;
                detail += fmt::format(" [{} eV: {:.4f} +- {:.4f}, paired {:.4f} +- {:.4f}, Asimov {:.4f}]",
                                      row.depth_ev, row.mean_m2, row.stderr_m2, row.paired_m2, row.paired_stderr,
                                      row.asimov_m2);
            }
            else
            {
                control_ok = control_ok && std::fabs(row.mean_m2) <= 3 * row.stderr_m2;
                detail += fmt::format(" [control {} eV: {:.4f} +- {:.4f}]", row.depth_ev, row.mean_m2,
                                      row.stderr_m2);
            }
        }
        const bool band = std::fabs(at200) >= 0.1 && std::fabs(at200) <= 20;
        report(10, negative && band && control_ok && !flagged, "negative m2 from endpoint drift",
               fmt::format("mismatch negative at all depths: {}; |mean| at 200 eV in [0.1, 20]: {}; control "
                           "within 3 s.e.: {}; {:.0f} s;{}",
                           negative ? "yes" : "no", band ? "yes" : "no", control_ok ? "yes" : "no",
                           seconds_since(t0), detail));
    }

    fmt::print("{} criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
