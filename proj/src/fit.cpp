#include "betaspec/fit.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"

#include "betaspec/error.hpp"

namespace betaspec {

std::string_view fit_parameter_name(int index)
{
    static constexpr std::string_view names[] = {"amplitude", "W0_eV", "m2_eV2", "background"};
    return names[index];
}

void FitConfig::validate() const
{
    if (!(window_lo_ev < window_hi_ev))
        throw ConfigError("fit window needs lo < hi");
    if (window_hi_ev > initial.endpoint_ev + 50)
        throw ConfigError("fit window upper edge must not exceed W0 guess + 50 eV");
    if (free_count() == 0)
        throw ConfigError("at least one parameter must be free");
    if (max_iterations < 1)
        throw ConfigError("max_iterations must be positive");
    response.validate();
}

int FitConfig::free_count() const
{
    int n = 0;
    for (bool f : free)
        n += f ? 1 : 0;
    return n;
}

double FitResult::error(int index) const
{
    if (!covariance)
        return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt((*covariance)(index, index));
}

namespace {

std::array<double, 4> to_array(const SpectrumParams& p)
{
    return {p.amplitude, p.endpoint_ev, p.m2_ev2, p.background};
}

SpectrumParams from_array(const std::array<double, 4>& a, const SpectrumParams& base)
{
    SpectrumParams p = base;
    p.amplitude = a[fit_amplitude];
    p.endpoint_ev = a[fit_endpoint];
    p.m2_ev2 = a[fit_m2];
    p.background = a[fit_background];
    return p;
}

class WindowModel
{
  public:
    WindowModel(const PseudoDataset& data, const FitConfig& config, const FinalStateSpectrum& fss)
        : config_(config), fss_(fss)
    {
        for (std::size_t i = 0; i < data.centers.size(); ++i)
        {
            if (data.centers[i] >= config.window_lo_ev && data.centers[i] <= config.window_hi_ev)
            {
                centers_.push_back(data.centers[i]);
                counts_.push_back(data.counts[i]);
            }
        }
    }

    std::size_t bins() const { return centers_.size(); }

    Eigen::VectorXd residuals(const SpectrumParams& p)
    {
        const auto& s = shape(p);
        Eigen::VectorXd r(static_cast<Eigen::Index>(s.size()));
        for (std::size_t i = 0; i < s.size(); ++i)
        {
            const double mu = p.amplitude * s[i] + p.background;
            r(static_cast<Eigen::Index>(i)) = (counts_[i] - mu) / std::sqrt(std::max(mu, 1.0));
        }
        return r;
    }

  private:
    // A and b enter linearly; the smeared shape depends on (W0, m2) only.
    const std::vector<double>& shape(const SpectrumParams& p)
    {
        for (const auto& e : cache_)
        {
            if (e.endpoint == p.endpoint_ev && e.m2 == p.m2_ev2)
                return e.values;
        }
        if (cache_.size() >= 16)
            cache_.erase(cache_.begin());
        cache_.push_back({p.endpoint_ev, p.m2_ev2,
                          smeared_integral_shape(p, fss_, config_.response, centers_, config_.jobs)});
        return cache_.back().values;
    }

    struct Entry
    {
        double endpoint;
        double m2;
        std::vector<double> values;
    };

    const FitConfig& config_;
    const FinalStateSpectrum& fss_;
    std::vector<double> centers_;
    std::vector<double> counts_;
    std::vector<Entry> cache_;
};

double step_size(int index, const std::array<double, 4>& x)
{
    switch (index)
    {
        case fit_amplitude: return std::max(std::fabs(x[fit_amplitude]) * 1e-6, std::numeric_limits<double>::min());
        case fit_endpoint: return 1e-4;
        case fit_m2: return 1e-3;
        default: return std::max(std::fabs(x[fit_background]), 1.0) * 1e-4;
    }
}

}  // namespace

double chi_square(const SpectrumParams& p, const PseudoDataset& data, const FitConfig& config,
                  const FinalStateSpectrum& fss)
{
    WindowModel model(data, config, fss);
    if (model.bins() < static_cast<std::size_t>(config.free_count() + 1))
        throw ConfigError("fit window selects too few bins");
    return model.residuals(p).squaredNorm();
}

FitResult minimize(const PseudoDataset& data, const FitConfig& config, const FinalStateSpectrum& fss)
{
    config.validate();
    WindowModel model(data, config, fss);
    const int n_free = config.free_count();
    if (model.bins() < static_cast<std::size_t>(n_free + 1))
        throw ConfigError("fit window selects too few bins");

    std::vector<int> index;
    for (int i = 0; i < fit_parameter_count; ++i)
    {
        if (config.free[i])
            index.push_back(i);
    }

    FitResult result;
    result.bins = static_cast<int>(model.bins());
    result.dof = result.bins - n_free;
    result.window_lo_ev = config.window_lo_ev;
    result.window_hi_ev = config.window_hi_ev;

    std::array<double, 4> x = to_array(config.initial);
    auto params_of = [&](const std::array<double, 4>& a) { return from_array(a, config.initial); };

    Eigen::VectorXd r = model.residuals(params_of(x));
    double chi2 = r.squaredNorm();
    if (!std::isfinite(chi2))
        throw ModelError("initial chi-square is not finite");

    auto jacobian = [&](const std::array<double, 4>& at) {
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(model.bins()), n_free);
        for (int k = 0; k < n_free; ++k)
        {
            const int i = index[k];
            const double h = step_size(i, at);
            auto up = at;
            auto down = at;
            up[i] += h;
            down[i] -= h;
            jac.col(k) = (model.residuals(params_of(up)) - model.residuals(params_of(down))) / (2 * h);
        }
        return jac;
    };

    double lambda = 1e-3;
    Eigen::VectorXd scale = Eigen::VectorXd::Zero(n_free);
    Eigen::MatrixXd jac = jacobian(x);
    result.status = "iteration limit reached";
    int iter = 0;
    for (; iter < config.max_iterations; ++iter)
    {
        const Eigen::MatrixXd h = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        for (int k = 0; k < n_free; ++k)
            scale(k) = std::max(scale(k), h(k, k));

        double gnorm = 0;
        for (int k = 0; k < n_free; ++k)
        {
            if (scale(k) > 0)
                gnorm = std::max(gnorm, std::fabs(g(k)) / std::sqrt(scale(k) * std::max(chi2, 1e-300)));
        }
        if (chi2 == 0 || gnorm < config.gradient_tolerance)
        {
            result.converged = true;
            result.status = "gradient below tolerance";
            break;
        }

        bool accepted = false;
        bool done = false;
        while (!accepted)
        {
            Eigen::MatrixXd a = h;
            for (int k = 0; k < n_free; ++k)
                a(k, k) += lambda * std::max(scale(k), 1e-300);
            const Eigen::VectorXd delta = a.ldlt().solve(-g);
            auto trial = x;
            for (int k = 0; k < n_free; ++k)
                trial[index[k]] += delta(k);
            const Eigen::VectorXd r_trial = model.residuals(params_of(trial));
            const double chi2_trial = r_trial.squaredNorm();
            if (std::isfinite(chi2_trial) && chi2_trial <= chi2)
            {
                accepted = true;
                const double change = chi2 - chi2_trial;
                double step = 0;
                for (int k = 0; k < n_free; ++k)
                    step = std::max(step, std::fabs(delta(k)) * std::sqrt(scale(k)));
                step /= std::sqrt(std::max(chi2_trial, 1.0));
                x = trial;
                r = r_trial;
                chi2 = chi2_trial;
                lambda = std::max(lambda / 10, 1e-12);
                if (change <= config.chi2_tolerance * std::max(chi2, 1e-300) || step < config.step_tolerance)
                {
                    result.converged = true;
                    result.status = change <= config.chi2_tolerance * std::max(chi2, 1e-300)
                                        ? "chi-square change below tolerance"
                                        : "step below tolerance";
                    done = true;
                }
            }
            else
            {
                lambda *= 10;
                if (lambda > 1e12)
                {
                    // No descent direction left at finite-difference resolution.
                    result.converged = true;
                    result.status = "no further decrease";
                    done = true;
                    break;
                }
            }
        }
        if (done)
        {
            ++iter;
            break;
        }
        jac = jacobian(x);
    }

    result.iterations = iter;
    result.params = params_of(x);
    result.chi2 = chi2;

    jac = jacobian(x);
    const Eigen::MatrixXd h = jac.transpose() * jac;
    // Conditioning is judged on the unit-diagonal form so parameter units drop out.
    const Eigen::VectorXd d = h.diagonal();
    if ((d.array() > 0).all())
    {
        const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd corr = s.asDiagonal() * h * s.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
        if (es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 1e-13 * es.eigenvalues().maxCoeff())
        {
            const Eigen::MatrixXd inv = s.asDiagonal()
                                        * (es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal()
                                           * es.eigenvectors().transpose())
                                        * s.asDiagonal();
            Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
            for (int a = 0; a < n_free; ++a)
            {
                for (int b = 0; b < n_free; ++b)
                    cov(index[a], index[b]) = 0.5 * (inv(a, b) + inv(b, a));
            }
            result.covariance = cov;
        }
    }
    return result;
}

//---------------------------------------------------------------------------//
FitConfig fit_config_from_json(const std::string& text)
{
    FitConfig c;
    try
    {
        const auto j = nlohmann::json::parse(text);
        const auto& w = j.at("window_eV");
        c.window_lo_ev = w.at(0).get<double>();
        c.window_hi_ev = w.at(1).get<double>();
        if (j.contains("initial"))
            c.initial = params_from_json(j.at("initial").dump());
        if (j.contains("response"))
            c.response = response_from_json(j.at("response").dump());
        if (j.contains("free"))
        {
            for (int i = 0; i < fit_parameter_count; ++i)
                c.free[i] = j.at("free").value(std::string(fit_parameter_name(i)), true);
        }
        c.max_iterations = j.value("max_iterations", c.max_iterations);
        c.chi2_tolerance = j.value("chi2_tolerance", c.chi2_tolerance);
        c.step_tolerance = j.value("step_tolerance", c.step_tolerance);
        c.gradient_tolerance = j.value("gradient_tolerance", c.gradient_tolerance);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("fit config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string fit_result_to_json(const FitResult& r)
{
    nlohmann::ordered_json j;
    j["params"] = nlohmann::ordered_json::parse(params_to_json(r.params));
    if (r.covariance)
    {
        auto cov = nlohmann::ordered_json::array();
        for (int a = 0; a < 4; ++a)
        {
            auto row = nlohmann::ordered_json::array();
            for (int b = 0; b < 4; ++b)
                row.push_back((*r.covariance)(a, b));
            cov.push_back(row);
        }
        j["covariance"] = cov;
        j["covariance_order"] = {"amplitude", "W0_eV", "m2_eV2", "background"};
    }
    else
    {
        j["covariance"] = nullptr;
    }
    j["chi2"] = r.chi2;
    j["dof"] = r.dof;
    j["bins"] = r.bins;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["status"] = r.status;
    j["statistic"] = "pearson chi-square, denominator max(mu, 1)";
    j["window_eV"] = {r.window_lo_ev, r.window_hi_ev};
    return j.dump(2) + "\n";
}

}  // namespace betaspec
