// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line. Run through ctest or directly as ./ccpd_acceptance.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ccpd/io.hpp"
#include "ccpd/reference.hpp"
#include "ccpd/registration.hpp"
#include "ccpd/synth.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>

using namespace ccpd;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void verdict(int criterion, const char* name, bool ok) {
    std::printf("criterion %d (%s): %s\n", criterion, name, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
    CHECK_MESSAGE(ok, "criterion ", criterion, " (", name, ")");
}

CorrespondenceGroundTruth identity_truth(Eigen::Index count) {
    CorrespondenceGroundTruth truth;
    for (Eigen::Index i = 0; i < count; ++i) truth.pairs.emplace_back(i, i);
    return truth;
}

// The shared missing-data instance: a 91-point nine-region serpentine whose
// mid band is pushed vertically by about one row spacing, so shape alone is
// ambiguous between adjacent rows while the region colors disambiguate.
constexpr double kRowGap = 0.08;
constexpr std::uint64_t kInstanceSeed = 18;

WarpField band_warp() {
    WarpField field;
    field.control_points.resize(1, 2);
    field.control_points << 0.5, 4.0 * kRowGap;
    field.amplitudes.resize(1, 2);
    field.amplitudes << 0.0, 0.7 * kRowGap;
    field.radius = 0.3;
    return field;
}

ExperimentSpec missing_data_spec(double fraction, std::uint64_t seed) {
    ExperimentSpec spec;
    spec.seed = seed;
    spec.missing_fraction = fraction;
    spec.removal_side = RemovalSide::anchor;
    spec.warp = band_warp();
    return spec;
}

RegistrationConfig experiment_config() {
    RegistrationConfig config;
    config.alpha = 0.1;
    config.beta = 0.7;
    config.lambda = 3.0;
    config.sigma_color = 0.08;
    return config;
}

double registered_rms(const ExperimentData& data, const RegistrationConfig& config,
                      Method method) {
    const RegistrationReport report =
        run_registration(data.anchor, data.model, config, method);
    return rms_error(report.transformed, data.anchor, data.truth);
}

}  // namespace

TEST_CASE("criterion 1: cpd reduction equivalence") {
    const auto start = Clock::now();
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 20 && ok; ++seed) {
        const Eigen::Index m = 20 + static_cast<Eigen::Index>(seed * 2);
        const Eigen::Index n = 60 - static_cast<Eigen::Index>(seed);
        const Eigen::Index dims = seed % 2 ? 2 : 3;
        const ColoredPointSet anchor = testing::random_cloud(n, dims, 3, 1000 + seed);
        const ColoredPointSet model = testing::random_cloud(m, dims, 3, 2000 + seed);
        RegistrationConfig config;
        config.w_color = 0.0;
        config.color_outlier_term = false;
        config.max_iterations = 25;
        const RegistrationReport a = register_ccpd(anchor, model, config);
        const RegistrationReport b = register_cpd(anchor, model, config);
        ok = testing::max_abs_diff(a.transformed.positions, b.transformed.positions) <= 1e-9;
    }
    ok = ok && seconds_since(start) < 10.0;
    verdict(1, "cpd reduction equivalence", ok);
}

TEST_CASE("criterion 2: e-step oracle equivalence") {
    const auto start = Clock::now();
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 50 && ok; ++seed) {
        const Eigen::Index m = 3 + static_cast<Eigen::Index>(seed % 7);
        const Eigen::Index n = 4 + static_cast<Eigen::Index>(seed % 5);
        const Eigen::Index dims = seed % 2 ? 2 : 3;
        const ColoredPointSet anchor = testing::random_cloud(n, dims, 3, 3000 + seed);
        const ColoredPointSet model = testing::random_cloud(m, dims, 3, 4000 + seed);
        const double sigma_c = 0.2 + 0.01 * static_cast<double>(seed % 10);
        LikelihoodMatrices lik;
        set_shape_likelihoods(lik, anchor.positions, model.positions, 0.3);
        set_color_likelihoods(lik, anchor, model, sigma_c);
        RegistrationConfig config;
        config.alpha = 0.1;
        config.sigma_color = sigma_c;
        const PosteriorMatrix combined = ccpd_posterior(lik, config);
        const PosteriorMatrix combined_ref = reference::ccpd_posterior(lik.shape, lik.color, config);
        const PosteriorMatrix plain = cpd_posterior(lik, config.alpha);
        const PosteriorMatrix plain_ref = reference::cpd_posterior(lik.shape, config.alpha);
        ok = testing::max_relative_diff(combined.weights, combined_ref.weights) <= 1e-12 &&
             testing::max_relative_diff(plain.weights, plain_ref.weights) <= 1e-12 &&
             testing::max_abs_diff(combined.outlier_mass, combined_ref.outlier_mass) <= 1e-12 &&
             testing::max_abs_diff(plain.outlier_mass, plain_ref.outlier_mass) <= 1e-12;
    }
    ok = ok && seconds_since(start) < 5.0;
    verdict(2, "e-step oracle equivalence", ok);
}

TEST_CASE("criterion 3: m-step oracle equivalence") {
    const auto start = Clock::now();
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 50 && ok; ++seed) {
        const Eigen::Index m = 4 + static_cast<Eigen::Index>(seed % 8);
        const Eigen::Index n = 5 + static_cast<Eigen::Index>(seed % 6);
        const Eigen::Index dims = seed % 2 ? 2 : 3;
        const Eigen::MatrixXd posterior =
            testing::random_matrix(m, n, 5000 + seed, 0.01, 1.0);
        const Eigen::MatrixXd x = testing::random_matrix(n, dims, 6000 + seed, -1, 1);
        const Eigen::MatrixXd y = testing::random_matrix(m, dims, 7000 + seed, -1, 1);
        const Eigen::MatrixXd kernel = build_kernel(y, 0.9);
        const double lambda = 1.0 + 0.1 * static_cast<double>(seed % 5);
        const double sigma_sq = 0.1 + 0.05 * static_cast<double>(seed % 4);

        const Eigen::MatrixXd w = solve_coefficients({posterior, x, y, kernel, lambda, sigma_sq});
        const Eigen::MatrixXd w_ref =
            reference::solve_coefficients_literal(posterior, x, y, kernel, lambda, sigma_sq);

        PosteriorMatrix post{posterior, Eigen::VectorXd::Zero(n)};
        const Eigen::MatrixXd t = apply_transform(y, kernel, w);
        const double sigma = update_sigma_shape(post, x, t, 1e-15);
        const double sigma_ref = reference::update_sigma_shape(posterior, x, t);

        ok = testing::max_abs_diff(w, w_ref) <= 1e-9 &&
             std::abs(sigma - sigma_ref) <= 1e-11 * std::max(1.0, std::abs(sigma_ref));
    }
    ok = ok && seconds_since(start) < 10.0;
    verdict(3, "m-step oracle equivalence", ok);
}

TEST_CASE("criterion 4: identity registration") {
    const auto start = Clock::now();
    const ColoredPointSet cloud = testing::random_cloud(200, 3, 3, 8000);
    RegistrationConfig config;
    config.max_iterations = 30;
    config.sigma_color = 0.2;
    bool ok = true;
    for (const Method method : {Method::ccpd, Method::cpd}) {
        const RegistrationReport report = run_registration(cloud, cloud, config, method);
        const double rms = rms_error(report.transformed, cloud, identity_truth(cloud.count()));
        ok = ok && rms < 1e-6 && report.iterations <= 30;
    }
    ok = ok && seconds_since(start) < 5.0;
    verdict(4, "identity registration", ok);
}

TEST_CASE("criterion 5: missing-data ordering") {
    const auto start = Clock::now();
    const ColoredPointSet base = make_segmented_shape(91, 9, kRowGap);
    const RegistrationConfig config = experiment_config();

    const ExperimentData at22 = materialize(missing_data_spec(20.0 / 91.0, kInstanceSeed), base);
    const ExperimentData at58 = materialize(missing_data_spec(53.0 / 91.0, kInstanceSeed), base);

    const double ccpd22 = registered_rms(at22, config, Method::ccpd);
    const double cpd22 = registered_rms(at22, config, Method::cpd);
    const double ccpd58 = registered_rms(at58, config, Method::ccpd);
    const double cpd58 = registered_rms(at58, config, Method::cpd);

    std::printf("  22%% removal: ccpd %.4e  cpd %.4e\n", ccpd22, cpd22);
    std::printf("  58%% removal: ccpd %.4e  cpd %.4e\n", ccpd58, cpd58);
    std::printf("  degradation: ccpd %.2fx  cpd %.2fx\n", ccpd58 / ccpd22, cpd58 / cpd22);

    const bool ok = ccpd22 < cpd22 && ccpd58 < cpd58 && ccpd58 < 3.0 * ccpd22 &&
                    cpd58 > 3.0 * cpd22 && seconds_since(start) < 60.0;
    verdict(5, "missing-data ordering", ok);
}

TEST_CASE("criterion 6: color-noise robustness") {
    const auto start = Clock::now();
    const ColoredPointSet base = make_segmented_shape(91, 9, kRowGap);
    const ExperimentData instance =
        materialize(missing_data_spec(20.0 / 91.0, kInstanceSeed), base);

    const double noiseless = registered_rms(instance, experiment_config(), Method::ccpd);
    std::printf("  noiseless rms %.4e\n", noiseless);

    const std::pair<double, double> levels[] = {{20.0, 0.10}, {15.0, 0.15}, {10.0, 0.25},
                                                {5.0, 0.40}};
    bool ok = true;
    for (const auto& [snr_db, sigma_c] : levels) {
        double mean_rms = 0.0;
        for (std::uint64_t rep = 0; rep < 5; ++rep) {
            ExperimentData noisy = instance;
            noisy.model = add_color_noise(instance.model, snr_db, 900 + rep);
            RegistrationConfig config = experiment_config();
            config.sigma_color = sigma_c;  // tuned per level
            mean_rms += registered_rms(noisy, config, Method::ccpd);
        }
        mean_rms /= 5.0;
        std::printf("  snr %4.1f dB: mean rms %.4e (%.2fx noiseless)\n", snr_db, mean_rms,
                    mean_rms / noiseless);
        ok = ok && mean_rms <= 10.0 * noiseless;
    }
    ok = ok && seconds_since(start) < 300.0;
    verdict(6, "color-noise robustness", ok);
}

TEST_CASE("criterion 7: color-outlier degradation") {
    const auto start = Clock::now();
    const ColoredPointSet base = make_segmented_shape(91, 9, kRowGap);
    const ExperimentData instance =
        materialize(missing_data_spec(20.0 / 91.0, kInstanceSeed), base);
    const RegistrationConfig config = experiment_config();

    bool ok = true;
    double previous = -1.0;
    for (const double fraction : {0.0, 0.05, 0.25, 0.50, 0.75}) {
        double mean_rms = 0.0;
        for (std::uint64_t rep = 0; rep < 5; ++rep) {
            ExperimentData corrupted = instance;
            corrupted.model = inject_color_outliers(instance.model, fraction, 1700 + rep);
            mean_rms += registered_rms(corrupted, config, Method::ccpd);
        }
        mean_rms /= 5.0;
        std::printf("  outliers %4.1f%%: mean rms %.4e\n", fraction * 100.0, mean_rms);
        ok = ok && mean_rms >= previous - 1e-12;
        previous = mean_rms;
    }
    ok = ok && seconds_since(start) < 300.0;
    verdict(7, "color-outlier degradation", ok);
}

TEST_CASE("criterion 8: property suite") {
    const auto start = Clock::now();
    bool ok = true;

    {  // kernel symmetry and positive semidefiniteness
        const Eigen::MatrixXd y = testing::random_matrix(20, 3, 9100, -1, 1);
        const Eigen::MatrixXd kernel = build_kernel(y, 1.1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kernel);
        ok = ok && kernel == kernel.transpose().eval() &&
             eig.eigenvalues().minCoeff() >= -1e-10;
    }
    {  // posterior nonnegativity, boundedness, cpd stochasticity
        const ColoredPointSet anchor = testing::random_cloud(12, 3, 3, 9200);
        const ColoredPointSet model = testing::random_cloud(10, 3, 3, 9300);
        LikelihoodMatrices lik;
        set_shape_likelihoods(lik, anchor.positions, model.positions, 0.2);
        set_color_likelihoods(lik, anchor, model, 0.3);
        RegistrationConfig config;
        config.sigma_color = 0.3;
        const PosteriorMatrix combined = ccpd_posterior(lik, config);
        const PosteriorMatrix plain = cpd_posterior(lik, config.alpha);
        ok = ok && combined.weights.minCoeff() >= 0.0 && combined.weights.allFinite();
        for (Eigen::Index n = 0; n < anchor.count(); ++n) {
            ok = ok && combined.weights.col(n).sum() <= 1.0 + 1e-9;
            ok = ok &&
                 std::abs(plain.weights.col(n).sum() + plain.outlier_mass(n) - 1.0) <= 1e-12;
        }
    }
    {  // determinism
        const ColoredPointSet anchor = testing::random_cloud(40, 2, 3, 9400);
        ColoredPointSet model = testing::random_cloud(40, 2, 3, 9500);
        RegistrationConfig config;
        config.sigma_color = 0.2;
        config.max_iterations = 20;
        const RegistrationReport a = register_ccpd(anchor, model, config);
        const RegistrationReport b = register_ccpd(anchor, model, config);
        ok = ok && a.iterations == b.iterations &&
             std::memcmp(a.transformed.positions.data(), b.transformed.positions.data(),
                         sizeof(double) *
                             static_cast<std::size_t>(a.transformed.positions.size())) == 0 &&
             a.objective_trace == b.objective_trace;
    }
    {  // translation equivariance through one E+M cycle
        const Eigen::RowVector2d shift(1.7, -2.3);
        const ColoredPointSet anchor = testing::random_cloud(15, 2, 1, 9600);
        const ColoredPointSet model = testing::random_cloud(12, 2, 1, 9700);
        auto one_cycle = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
            LikelihoodMatrices lik;
            set_shape_likelihoods(lik, x, y, 0.3);
            const PosteriorMatrix post = cpd_posterior(lik, 0.1);
            const Eigen::MatrixXd kernel = build_kernel(y, 1.0);
            const Eigen::MatrixXd w = solve_coefficients({post.weights, x, y, kernel, 2.0, 0.3});
            return std::make_pair(w, apply_transform(y, kernel, w));
        };
        const auto [w_base, t_base] = one_cycle(anchor.positions, model.positions);
        const auto [w_shifted, t_shifted] =
            one_cycle((anchor.positions.rowwise() + shift).eval(),
                      (model.positions.rowwise() + shift).eval());
        ok = ok && testing::max_abs_diff(w_base, w_shifted) <= 1e-9 &&
             testing::max_abs_diff((t_base.rowwise() + shift).eval(), t_shifted) <= 1e-9;
    }
    {  // lambda -> infinity pins the field
        const Eigen::MatrixXd posterior = testing::random_matrix(8, 8, 9800, 0.05, 1.0);
        const Eigen::MatrixXd x = testing::random_matrix(8, 2, 9810, -1, 1);
        const Eigen::MatrixXd y = testing::random_matrix(8, 2, 9820, -1, 1);
        const Eigen::MatrixXd kernel = build_kernel(y, 1.0);
        const Eigen::MatrixXd w = solve_coefficients({posterior, x, y, kernel, 1e8, 1.0});
        const Eigen::MatrixXd rhs =
            posterior * x - posterior.rowwise().sum().asDiagonal() * y;
        ok = ok && (kernel * w).norm() <= 1e-4 * rhs.norm();
    }
    {  // file round-trips
        const fs::path dir =
            fs::temp_directory_path() / ("ccpd-acc-" + std::to_string(::getpid()));
        fs::create_directories(dir);
        const ColoredPointSet cloud = testing::random_cloud(12, 3, 3, 9900);
        for (const char* name : {"rt.csv", "rt.ply", "rt.pcd"}) {
            const std::string path = (dir / name).string();
            write_point_cloud(cloud, path);
            const ColoredPointSet back = read_point_cloud(path);
            ok = ok && testing::max_abs_diff(back.positions, cloud.positions) < 1e-6 &&
                 testing::max_abs_diff(back.colors, cloud.colors) <= 0.5 / 255.0 + 1e-12;
        }
        CorrespondenceGroundTruth truth;
        truth.pairs = {{0, 1}, {2, 3}};
        write_truth(truth, (dir / "truth.csv").string());
        ok = ok && read_truth((dir / "truth.csv").string()).pairs == truth.pairs;
        fs::remove_all(dir);
    }

    ok = ok && seconds_since(start) < 60.0;
    verdict(8, "property suite", ok);
}

TEST_CASE("criterion 9: performance sanity at 1000 points") {
    const ColoredPointSet anchor = testing::random_cloud(1000, 3, 3, 9950);
    ColoredPointSet model = anchor;
    WarpField field;
    field.control_points = testing::random_matrix(3, 3, 9960);
    field.amplitudes = testing::random_matrix(3, 3, 9970, -0.05, 0.05);
    field.radius = 0.4;
    model = apply_warp(model, field);

    RegistrationConfig config;
    config.sigma_color = 0.2;
    config.max_iterations = 150;

    const auto start = Clock::now();
    const RegistrationReport report = register_ccpd(anchor, model, config);
    const double elapsed = seconds_since(start);
    std::printf("  1000x1000 ccpd: %d iterations in %.1f s\n", report.iterations, elapsed);
    verdict(9, "performance sanity", elapsed < 60.0);
}
