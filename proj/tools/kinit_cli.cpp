// Benchmark runner: seeds k-means with each method on each data set, then
// writes per-criterion tables, rankings and raw per-run records.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "kinit/kinit.hpp"

namespace {

std::size_t parse_count(const std::string& text, const char* what) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || text.empty() || text.front() == '-') {
        throw kinit::Error(std::string("bad ") + what + " '" + text + "'");
    }
    return static_cast<std::size_t>(v);
}

kinit::CsvOptions csv_options(const std::string& label_column, const std::string& delimiter, bool header) {
    const std::string d = delimiter == "\\t" ? "\t" : delimiter;
    if (d.size() != 1) throw kinit::Error("delimiter must be a single character");
    kinit::CsvOptions opts;
    opts.delimiter = d[0];
    opts.has_header = header;
    if (label_column == "last") {
        opts.label_column = kinit::CsvOptions::last_column;
    } else if (label_column != "none") {
        opts.label_column = parse_count(label_column, "label column");
    }
    return opts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compare k-means initialization methods on labeled data sets"};
    app.require_subcommand(0, 1);

    std::vector<std::string> data;
    std::vector<std::string> methods;
    std::string k_text = "auto";
    std::size_t runs = 100;
    std::uint64_t seed = 1;
    int max_iters = 100;
    double eps = 1e-6;
    bool no_normalize = false;
    bool accelerate = true;
    double alpha = 0.05;
    std::string format = "csv";
    std::string out = "results";
    std::string label_column = "last";
    std::string delimiter = ",";
    bool header = false;
    std::string rng = "mt19937_64";
    unsigned threads = 1;

    app.add_option("--data", data, "Data files or mixture specs (gauss:n=,d=,k=,sep=,seed=)");
    app.add_option("--methods", methods, "Methods by name or letter (default: all)")->delimiter(',');
    app.add_option("--k", k_text, "Cluster count, or 'auto' for one per class")->capture_default_str();
    app.add_option("--runs", runs, "Runs per randomized method")->capture_default_str();
    app.add_option("--seed", seed, "Base seed")->capture_default_str();
    app.add_option("--max-iters", max_iters, "Lloyd iteration cap")->capture_default_str();
    app.add_option("--eps", eps, "Relative SSE improvement threshold")->capture_default_str();
    app.add_flag("--no-normalize", no_normalize, "Skip min-max scaling of data files");
    app.add_flag("--accelerate,!--naive", accelerate, "Use bound-based assignment (default) or plain Lloyd");
    app.add_option("--alpha", alpha, "Significance level")->capture_default_str();
    app.add_option("--format", format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown"}))->capture_default_str();
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_option("--label-column", label_column, "Label column: index, 'last' or 'none'")->capture_default_str();
    app.add_option("--delimiter", delimiter, "Field delimiter")->capture_default_str();
    app.add_flag("--header", header, "Data files start with a header line");
    app.add_option("--rng", rng, "Generator: mt19937_64 or mt19937")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads per method")->capture_default_str();

    auto* gen = app.add_subcommand("generate", "Write a synthetic mixture as CSV plus a JSON sidecar");
    kinit::MixtureSpec spec;
    std::string spec_text;
    std::string stem;
    gen->add_option("--spec", spec_text, "Mixture spec, e.g. gauss:n=1024,d=2,k=4,sep=6,seed=1");
    gen->add_option("--n", spec.n_points, "Points")->capture_default_str();
    gen->add_option("--d", spec.n_dims, "Dimensions")->capture_default_str();
    gen->add_option("--k", spec.n_clusters, "Components")->capture_default_str();
    gen->add_option("--sep", spec.separation, "Minimum distance between means")->capture_default_str();
    gen->add_option("--seed", spec.seed, "Seed")->capture_default_str();
    gen->add_option("--out", stem, "Output path without extension")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            if (!spec_text.empty()) spec = kinit::parse_mixture_spec(spec_text);
            spec.engine = kinit::parse_engine(rng);
            const auto m = kinit::generate_mixture(spec);
            const auto score = kinit::save_mixture(m, stem);
            fmt::print("{}.csv: {} points, omega {:.4f} ({})\n", stem, m.data.size(), score.omega,
                       kinit::to_string(score.level));
            return 0;
        }

        if (data.empty()) throw kinit::Error("--data is required");
        kinit::ExperimentConfig config;
        config.datasets = data;
        if (!methods.empty()) {
            config.methods.clear();
            for (const auto& m : methods) config.methods.push_back(kinit::parse_method(m));
        }
        if (k_text != "auto") config.k = parse_count(k_text, "--k");
        config.runs = runs;
        config.seed = seed;
        config.engine = kinit::parse_engine(rng);
        config.kmeans.max_iters = max_iters;
        config.kmeans.eps = eps;
        config.kmeans.accelerate = accelerate;
        config.normalize = !no_normalize;
        config.csv = csv_options(label_column, delimiter, header);
        config.threads = threads;
        if (!(alpha > 0.0 && alpha < 1.0)) throw kinit::Error("--alpha must lie in (0, 1)");

        const auto bundle = kinit::run_experiment(config);
        const auto files = kinit::emit_report(bundle, kinit::parse_report_format(format), out, alpha);
        for (const auto& w : bundle.warnings) fmt::print(stderr, "warning: {}\n", w);
        fmt::print("{} data set(s), {} method(s); {} files written to {}\n", bundle.datasets.size(),
                   config.methods.size(), files.size(), out);
        return 0;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
}
