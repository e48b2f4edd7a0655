// Times the parallel kernels against the serial reference implementation at a
// few problem sizes. Not a ctest target; run it directly.

#include "ccpd/coherent.hpp"
#include "ccpd/gmm.hpp"
#include "ccpd/reference.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int repeats) {
    fn();  // warm-up
    const auto start = Clock::now();
    for (int r = 0; r < repeats; ++r) fn();
    const auto stop = Clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / repeats;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = unit(rng);
    return m;
}

void report(const char* name, Eigen::Index size, double serial_ms, double parallel_ms) {
    std::printf("%-18s %6lld  %10.3f  %10.3f  %6.2fx\n", name, static_cast<long long>(size),
                serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without openmp; both columns are serial\n");
#endif
    std::printf("%-18s %6s  %10s  %10s  %s\n", "kernel", "n", "serial ms", "parallel ms",
                "speedup");

    for (const Eigen::Index n : {200, 500, 1000}) {
        const Eigen::MatrixXd anchors = random_matrix(n, 3, 7);
        const Eigen::MatrixXd models = random_matrix(n, 3, 13);
        const double sigma_sq = 0.05;
        const int repeats = n >= 1000 ? 3 : 10;

        report("shape_likelihoods", n,
               time_ms([&] { ccpd::reference::shape_likelihoods(anchors, models, sigma_sq); },
                       repeats),
               time_ms([&] { ccpd::shape_likelihoods(anchors, models, sigma_sq); }, repeats));

        report("build_kernel", n,
               time_ms([&] { ccpd::reference::build_kernel(models, 2.0); }, repeats),
               time_ms([&] { ccpd::build_kernel(models, 2.0); }, repeats));

        ccpd::LikelihoodMatrices lik;
        ccpd::set_shape_likelihoods(lik, anchors, models, sigma_sq);
        ccpd::RegistrationConfig config;
        config.sigma_color = 1.0;
        report("cpd_posterior", n,
               time_ms([&] { ccpd::reference::cpd_posterior(lik.shape, config.alpha); }, repeats),
               time_ms([&] { ccpd::cpd_posterior(lik, config.alpha); }, repeats));

        const Eigen::MatrixXd kernel = ccpd::build_kernel(models, 2.0);
        const ccpd::PosteriorMatrix post = ccpd::cpd_posterior(lik, config.alpha);
        report("apply_transform", n,
               time_ms([&] {
                   ccpd::reference::apply_transform(models, kernel,
                                                    Eigen::MatrixXd::Zero(n, 3));
               }, repeats),
               time_ms([&] {
                   ccpd::apply_transform(models, kernel, Eigen::MatrixXd::Zero(n, 3));
               }, repeats));

        report("update_sigma", n,
               time_ms([&] {
                   ccpd::reference::update_sigma_shape(post.weights, anchors, models);
               }, repeats),
               time_ms([&] { ccpd::update_sigma_shape(post, anchors, models, 1e-10); },
                       repeats));
    }
    return 0;
}
