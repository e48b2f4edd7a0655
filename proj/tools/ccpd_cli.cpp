#include "ccpd/io.hpp"
#include "ccpd/registration.hpp"
#include "ccpd/synth.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <sstream>

namespace {

// Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

ccpd::RegistrationConfig load_config_with_overrides(
    const std::string& config_path, const std::vector<std::string>& overrides) {
    ccpd::RegistrationConfig config;
    if (!config_path.empty()) config = ccpd::load_config(config_path);
    for (const auto& entry : overrides) {
        const std::size_t eq = entry.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + entry + "'");
        ccpd::apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
    }
    ccpd::require_valid(config);
    return config;
}

std::string join_trace(const std::vector<double>& values) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ',';
        out << values[i];
    }
    return out.str();
}

int run_register(const std::string& anchor_path, const std::string& model_path,
                 const std::string& method, const std::string& config_path,
                 const std::vector<std::string>& overrides, const std::string& out_path,
                 const std::string& flow_path, const std::string& metrics_path,
                 const std::string& truth_path) {
    const ccpd::RegistrationConfig config = load_config_with_overrides(config_path, overrides);
    const ccpd::ColoredPointSet anchor = ccpd::read_point_cloud(anchor_path);
    const ccpd::ColoredPointSet model = ccpd::read_point_cloud(model_path);

    const ccpd::Method m = method == "cpd" ? ccpd::Method::cpd : ccpd::Method::ccpd;
    if (m == ccpd::Method::ccpd && config.w_color > 0.0 &&
        (anchor.color_dims() == 0 || model.color_dims() == 0))
        std::cerr << "warning: color weighting requested but the input has no color columns; "
                     "registering on positions only\n";
    const ccpd::RegistrationReport report = ccpd::run_registration(anchor, model, config, m);

    if (!out_path.empty()) ccpd::write_point_cloud(report.transformed, out_path);
    if (!flow_path.empty())
        ccpd::write_flow_csv(ccpd::flow_field(model, report.transformed), flow_path);

    std::ostringstream metrics;
    metrics.precision(17);
    metrics << "method=" << method << '\n'
            << "iterations=" << report.iterations << '\n'
            << "converged=" << (report.converged ? "true" : "false") << '\n';
    if (!truth_path.empty()) {
        const ccpd::CorrespondenceGroundTruth truth = ccpd::read_truth(truth_path);
        metrics << "rms=" << ccpd::rms_error(report.transformed, anchor, truth) << '\n';
    }
    metrics << "sigma_shape_trace=" << join_trace(report.sigma_shape_trace) << '\n'
            << "objective_trace=" << join_trace(report.objective_trace) << '\n';
    if (!metrics_path.empty())
        ccpd::write_text_atomic(metrics_path, metrics.str());
    else
        std::cout << metrics.str();
    return kExitOk;
}

int run_synth(const std::string& base_path, const std::string& spec_path,
              const std::string& anchor_out, const std::string& model_out,
              const std::string& truth_out) {
    const ccpd::ColoredPointSet base = ccpd::read_point_cloud(base_path);
    const ccpd::ExperimentSpec spec = ccpd::load_experiment_spec(spec_path);
    const ccpd::ExperimentData data = ccpd::materialize(spec, base);
    ccpd::write_point_cloud(data.anchor, anchor_out);
    ccpd::write_point_cloud(data.model, model_out);
    ccpd::write_truth(data.truth, truth_out);
    return kExitOk;
}

int run_eval(const std::string& transformed_path, const std::string& anchor_path,
             const std::string& truth_path) {
    const ccpd::ColoredPointSet transformed = ccpd::read_point_cloud(transformed_path);
    const ccpd::ColoredPointSet anchor = ccpd::read_point_cloud(anchor_path);
    const ccpd::CorrespondenceGroundTruth truth = ccpd::read_truth(truth_path);
    std::cout.precision(17);
    std::cout << ccpd::rms_error(transformed, anchor, truth) << '\n';
    return kExitOk;
}

int run_compare(const std::string& base_path, const std::string& spec_path,
                const std::string& config_path, const std::vector<std::string>& overrides,
                const std::string& out_path) {
    const ccpd::RegistrationConfig config = load_config_with_overrides(config_path, overrides);
    const ccpd::ColoredPointSet base = ccpd::read_point_cloud(base_path);
    const ccpd::ExperimentSpec spec = ccpd::load_experiment_spec(spec_path);
    const ccpd::ExperimentResult result = ccpd::run_experiment(spec, base, config);
    const std::vector<ccpd::ComparisonRecord> rows{result.ccpd, result.cpd};
    if (!out_path.empty()) {
        ccpd::append_records(rows, out_path);
    } else {
        for (const auto& r : rows)
            std::cout << r.spec_hash << '\t' << r.seed << '\t' << r.method << '\t' << r.rms
                      << '\t' << r.iterations << '\t' << r.milliseconds << '\n';
    }
    return kExitOk;
}

int run_report(const std::string& in_path) {
    const std::vector<ccpd::ComparisonRecord> records = ccpd::read_records(in_path);
    struct Bucket {
        double rms = 0, iterations = 0, ms = 0;
        int n = 0;
    };
    std::map<std::pair<std::string, std::string>, Bucket> buckets;
    for (const auto& r : records) {
        Bucket& b = buckets[{r.spec_hash, r.method}];
        b.rms += r.rms;
        b.iterations += r.iterations;
        b.ms += r.milliseconds;
        ++b.n;
    }
    std::cout << "condition          method  runs  mean_rms      mean_iters  mean_ms\n";
    for (const auto& [key, b] : buckets) {
        char line[160];
        std::snprintf(line, sizeof line, "%-18s %-6s %5d  %-12.6g %9.1f %9.2f\n",
                      key.first.c_str(), key.second.c_str(), b.n, b.rms / b.n,
                      b.iterations / b.n, b.ms / b.n);
        std::cout << line;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Color-aware coherent point drift registration"};
    app.require_subcommand(1);

    std::string anchor_path, model_path, method = "ccpd", config_path, out_path, flow_path,
                metrics_path, truth_path, base_path, spec_path, transformed_path, in_path,
                anchor_out, model_out, truth_out;
    std::vector<std::string> overrides;

    CLI::App* reg = app.add_subcommand("register", "Register a moving cloud onto an anchor");
    reg->add_option("--anchor", anchor_path, "Anchor point cloud")->required();
    reg->add_option("--model", model_path, "Moving point cloud")->required();
    reg->add_option("--method", method, "ccpd or cpd")
        ->check(CLI::IsMember({"ccpd", "cpd"}));
    reg->add_option("--config", config_path, "key=value config file");
    reg->add_option("--set", overrides, "Inline config override key=value")->take_all();
    reg->add_option("--out", out_path, "Write the transformed cloud here");
    reg->add_option("--flow", flow_path, "Write flow arrows (CSV ox,oy,oz,dx,dy,dz)");
    reg->add_option("--metrics", metrics_path, "Write run metrics here");
    reg->add_option("--truth", truth_path, "Ground truth pairs for the RMS metric");

    CLI::App* synth = app.add_subcommand("synth", "Materialize a synthetic experiment");
    synth->add_option("--base", base_path, "Base point cloud")->required();
    synth->add_option("--spec", spec_path, "Experiment spec file")->required();
    synth->add_option("--out-anchor", anchor_out, "Anchor output")->required();
    synth->add_option("--out-model", model_out, "Model output")->required();
    synth->add_option("--out-truth", truth_out, "Ground truth output")->required();

    CLI::App* eval = app.add_subcommand("eval", "Print the RMS of a transformed cloud");
    eval->add_option("--transformed", transformed_path)->required();
    eval->add_option("--anchor", anchor_path)->required();
    eval->add_option("--truth", truth_path)->required();

    CLI::App* compare = app.add_subcommand("compare", "Run one experiment with both methods");
    compare->add_option("--base", base_path, "Base point cloud")->required();
    compare->add_option("--spec", spec_path, "Experiment spec file")->required();
    compare->add_option("--config", config_path, "key=value config file");
    compare->add_option("--set", overrides, "Inline config override key=value")->take_all();
    compare->add_option("--out", out_path, "Append comparison records here");

    CLI::App* report = app.add_subcommand("report", "Aggregate comparison records");
    report->add_option("--in", in_path, "Records file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (reg->parsed())
            return run_register(anchor_path, model_path, method, config_path, overrides,
                                out_path, flow_path, metrics_path, truth_path);
        if (synth->parsed())
            return run_synth(base_path, spec_path, anchor_out, model_out, truth_out);
        if (eval->parsed()) return run_eval(transformed_path, anchor_path, truth_path);
        if (compare->parsed())
            return run_compare(base_path, spec_path, config_path, overrides, out_path);
        if (report->parsed()) return run_report(in_path);
    } catch (const ccpd::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
