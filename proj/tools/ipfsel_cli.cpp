#include "ipfsel/ipfsel.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdint>
#include <string>
#include <vector>

namespace {

int exit_code(ipfsel_status s) {
    switch (s) {
    case IPFSEL_OK: return 0;
    case IPFSEL_INVALID_INPUT:
    case IPFSEL_REGION: return 1;
    default: return 2;
    }
}

int report(ipfsel_status s) {
    if (s != IPFSEL_OK) std::fprintf(stderr, "ipfsel: error: %s\n", ipfsel_last_error());
    return exit_code(s);
}

void progress_line(long done, long total, const char* message, void*) {
    std::fprintf(stderr, "[%ld/%ld] %s\n", done, total, message);
}

struct StabOptions {
    std::string data, schema, selector = "ipf", bound = "r-concave";
    double alpha = 1.0;
    int pairs = 50, k_folds = 5, cv_repeats = 10, jobs = 1;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, StabOptions& o) {
    cmd->add_option("--data", o.data, "CSV file with a header row")->required()->check(CLI::ExistingFile);
    cmd->add_option("--schema", o.schema, "JSON column schema")->required()->check(CLI::ExistingFile);
    cmd->add_option("--selector", o.selector, "lasso or ipf")->check(CLI::IsMember({"lasso", "ipf"}));
    cmd->add_option("--alpha", o.alpha, "elastic-net mixing, 1 = lasso")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--pairs", o.pairs, "complementary subsample pairs")->check(CLI::PositiveNumber);
    cmd->add_option("--k-folds", o.k_folds, "cross-validation folds")->check(CLI::Range(2, 1000));
    cmd->add_option("--cv-repeats", o.cv_repeats, "cross-validation repeats")->check(CLI::PositiveNumber);
    cmd->add_option("--bound", o.bound, "mb or r-concave")->check(CLI::IsMember({"mb", "r-concave"}));
    cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "random seed")->required();
}

ipfsel_analyze_options to_c(const StabOptions& o) {
    ipfsel_analyze_options c;
    ipfsel_analyze_options_init(&c);
    c.selector = o.selector.c_str();
    c.alpha = o.alpha;
    c.pairs = o.pairs;
    c.k_folds = o.k_folds;
    c.cv_repeats = o.cv_repeats;
    c.method = o.bound == "mb" ? IPFSEL_BOUND_MB : IPFSEL_BOUND_RCONCAVE;
    c.seed = o.seed;
    c.jobs = o.jobs;
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-modality variable selection with false-positive control"};
    app.set_version_flag("--version", std::string(ipfsel_version()));
    app.require_subcommand(1);

    std::string design, setting = "independent", out, truth;
    std::size_t n = 100;
    std::uint64_t seed = 0;
    auto* sim = app.add_subcommand("simulate", "Write one simulated dataset and its truth");
    sim->add_option("--design", design, "design A..I")->required();
    sim->add_option("--setting", setting, "independent or correlated")
        ->check(CLI::IsMember({"independent", "correlated"}));
    sim->add_option("--n", n, "observations")->check(CLI::Range(4, 10000000));
    sim->add_option("--seed", seed, "random seed")->required();
    sim->add_option("--out", out, "dataset CSV")->required();
    sim->add_option("--truth", truth, "truth JSON");

    std::string config, summary;
    int reps = 0, jobs = 1;
    auto* bench = app.add_subcommand("bench", "Run the simulation benchmark");
    bench->add_option("--config", config, "benchmark JSON")->check(CLI::ExistingFile);
    bench->add_option("--out", out, "results CSV")->required();
    bench->add_option("--summary", summary, "summary JSON");
    bench->add_option("--reps", reps, "replicates per cell")->check(CLI::PositiveNumber);
    bench->add_option("--seed", seed, "master seed")->required();
    bench->add_option("--jobs", jobs, "parallel replicates")->check(CLI::PositiveNumber);

    StabOptions an;
    std::string threshold = "optimal";
    double v_target = 2.0;
    auto* analyze = app.add_subcommand("analyze", "Stability selection on a tabular dataset");
    add_common(analyze, an);
    analyze->add_option("--threshold", threshold, "0.70, 0.80, any value in (0,1], or optimal");
    analyze->add_option("--v-target", v_target, "bound on expected false positives")->check(CLI::PositiveNumber);
    analyze->add_option("--out", out, "report JSON")->required();

    StabOptions st;
    double lambda = 0.0;
    std::vector<double> factors;
    auto* stab = app.add_subcommand("stabsel", "Selection frequencies without thresholding");
    add_common(stab, st);
    stab->add_option("--lambda", lambda, "fixed lambda, skipping tuning")->check(CLI::PositiveNumber);
    stab->add_option("--factors", factors, "penalty factors per modality, with --lambda")->delimiter(',');
    stab->add_option("--out", out, "output JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (*sim)
        return report(ipfsel_simulate(design.c_str(), setting.c_str(), n, seed, out.c_str(),
                                      truth.empty() ? nullptr : truth.c_str()));
    if (*bench)
        return report(ipfsel_bench(config.empty() ? nullptr : config.c_str(), reps, seed, jobs, out.c_str(),
                                   summary.empty() ? nullptr : summary.c_str(), progress_line, nullptr));
    if (*analyze) {
        auto c = to_c(an);
        c.threshold = threshold.c_str();
        c.v_target = v_target;
        return report(ipfsel_analyze(an.data.c_str(), an.schema.c_str(), &c, out.c_str()));
    }
    if (*stab) {
        if (!factors.empty() && lambda <= 0.0) {
            std::fprintf(stderr, "ipfsel: error: --factors requires --lambda\n");
            return 1;
        }
        auto c = to_c(st);
        c.lambda = lambda;
        c.factors = factors.empty() ? nullptr : factors.data();
        c.factor_count = factors.size();
        return report(ipfsel_stabsel(st.data.c_str(), st.schema.c_str(), &c, out.c_str()));
    }
    return 1;
}
