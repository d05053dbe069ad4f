// Simulates the close-pair count of a moving point cloud on the 2-torus and
// prints its mean and lag covariance next to the exact moment formulas.

#include <cstdio>
#include <vector>

#include "torusdyn/estimator.hpp"
#include "torusdyn/limit_covariance.hpp"
#include "torusdyn/moment_engine.hpp"

int main() {
    using namespace torusdyn;
    constexpr int D = 2;
    const double n = 400.0, r = 0.05, delta = 0.25;
    const SimParams params{n, 2.0, 0.5 * r, D, 2, 2024};

    const auto fnl = make_pair_indicator<D>(delta);
    const auto c = estimate_constants<D>(fnl, 100000, 1);
    const auto grid = uniform_grid(params.T, 0.25);
    const auto batch = simulate_batch<D>(params, grid, fnl, r, 400, Simulator::Marked, default_threads());

    const Centering formula{mean_f(n, r, c), var_f(n, r, c)};
    const auto sample = sample_centering(batch);
    std::printf("mean      formula %.4f  sample %.4f\n", formula.mean, sample.mean);
    std::printf("variance  formula %.4f  sample %.4f\n", formula.variance, sample.variance);

    const std::vector<double> lags{0.0, 0.25, 0.5, 1.0};
    const auto curve = empirical_covariance(batch, lags, formula);
    const auto zeta = mc_zeta<D>(fnl, c, 100000, 2);
    const auto regime = RegimeSpec::moderate(0.25, Gamma::finite(n * r * r));
    std::printf("%6s %10s %10s %10s\n", "lag", "empirical", "stderr", "limit");
    for (std::size_t i = 0; i < lags.size(); ++i)
        std::printf("%6.2f %10.4f %10.4f %10.4f\n", lags[i], curve.values[i], curve.std_error[i], limit_cov(regime, lags[i], c, zeta));
}
