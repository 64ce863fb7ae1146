#include "ipfsel/ipfsel.h"

#include "ipfsel/error.hpp"
#include "ipfsel/harness.hpp"
#include "ipfsel/simgen.hpp"
#include "ipfsel/solver.hpp"
#include "ipfsel/table.hpp"

#include <fstream>
#include <memory>
#include <sstream>
#include <string>

struct ipfsel_dataset {
    ipfsel::Dataset data;
    ipfsel::IndexSet truth;
};

struct ipfsel_fit {
    ipfsel::FitResult fit;
};

namespace {

thread_local std::string last_error;

ipfsel_status status_of(ipfsel::ErrorKind k) {
    switch (k) {
    case ipfsel::ErrorKind::invalid_input: return IPFSEL_INVALID_INPUT;
    case ipfsel::ErrorKind::region: return IPFSEL_REGION;
    case ipfsel::ErrorKind::tuning_failed: return IPFSEL_TUNING_FAILED;
    case ipfsel::ErrorKind::io: return IPFSEL_IO;
    case ipfsel::ErrorKind::runtime: break;
    }
    return IPFSEL_RUNTIME;
}

template <class F>
ipfsel_status guarded(F&& f) {
    try {
        f();
        last_error.clear();
        return IPFSEL_OK;
    } catch (const ipfsel::Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return IPFSEL_RUNTIME;
    } catch (const std::exception& e) {
        last_error = e.what();
        return IPFSEL_RUNTIME;
    } catch (...) {
        last_error = "unknown error";
        return IPFSEL_RUNTIME;
    }
}

void need(const void* p, const char* what) {
    ipfsel::require(p != nullptr, std::string(what) + " must not be NULL");
}

ipfsel::Family family_of(ipfsel_family f) {
    if (f == IPFSEL_LINEAR) return ipfsel::Family::linear;
    if (f == IPFSEL_LOGISTIC) return ipfsel::Family::logistic;
    ipfsel::fail(ipfsel::ErrorKind::invalid_input, "unknown family");
}

ipfsel::BoundMethod method_of(ipfsel_bound m) {
    if (m == IPFSEL_BOUND_MB) return ipfsel::BoundMethod::mb;
    if (m == IPFSEL_BOUND_RCONCAVE) return ipfsel::BoundMethod::r_concave;
    ipfsel::fail(ipfsel::ErrorKind::invalid_input, "unknown bound method");
}

ipfsel::PenaltySpec spec_of(const ipfsel::Dataset& d, const double* factors, double alpha, double lambda) {
    ipfsel::PenaltySpec s;
    const auto m = static_cast<std::size_t>(d.modalities());
    s.factors = factors ? std::vector<double>(factors, factors + m) : std::vector<double>(m, 1.0);
    s.alpha = alpha;
    s.lambda = lambda;
    s.validate(d.modalities());
    return s;
}

void write_file(const char* path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) ipfsel::fail(ipfsel::ErrorKind::io, std::string("cannot open '") + path + "' for writing");
    out << text;
    out.close();
    if (!out) ipfsel::fail(ipfsel::ErrorKind::io, std::string("failed writing '") + path + "'");
}

ipfsel::ProcedureSettings settings_of(const ipfsel_analyze_options& o) {
    ipfsel::ProcedureSettings s;
    s.pairs = o.pairs;
    s.v_target = o.v_target;
    s.alpha = o.alpha;
    s.k_folds = o.k_folds;
    s.cv_repeats = o.cv_repeats;
    s.bound_method = method_of(o.method);
    s.jobs = o.jobs < 1 ? 1 : o.jobs;
    ipfsel::require(s.pairs >= 1, "pairs must be at least 1");
    ipfsel::require(s.v_target > 0.0, "v_target must be positive");
    ipfsel::require(s.alpha > 0.0 && s.alpha <= 1.0, "alpha must lie in (0, 1]");
    return s;
}

} // namespace

extern "C" {

const char* ipfsel_version(void) { return "0.1.0"; }

const char* ipfsel_last_error(void) { return last_error.c_str(); }

ipfsel_status ipfsel_dataset_create(const double* y, const double* x, size_t n, size_t p,
                                    const size_t* modality_sizes, size_t modalities, ipfsel_dataset** out) {
    return guarded([&] {
        need(y, "y");
        need(x, "x");
        need(modality_sizes, "modality_sizes");
        need(out, "out");
        *out = nullptr;
        const auto ni = static_cast<Eigen::Index>(n), pi = static_cast<Eigen::Index>(p);
        Eigen::VectorXd yy = Eigen::Map<const Eigen::VectorXd>(y, ni);
        Eigen::MatrixXd xx = Eigen::Map<const Eigen::MatrixXd>(x, ni, pi);
        std::vector<ipfsel::Index> sizes(modality_sizes, modality_sizes + modalities);
        auto h = std::make_unique<ipfsel_dataset>();
        h->data = ipfsel::make_dataset(std::move(yy), std::move(xx), std::move(sizes));
        *out = h.release();
    });
}

ipfsel_status ipfsel_dataset_load(const char* csv_path, const char* schema_path, ipfsel_dataset** out,
                                  size_t* rows_dropped) {
    return guarded([&] {
        need(csv_path, "csv_path");
        need(schema_path, "schema_path");
        need(out, "out");
        *out = nullptr;
        auto ing = ipfsel::ingest_table(ipfsel::CsvTable::read(csv_path), ipfsel::ClinicalSchema::load(schema_path));
        auto h = std::make_unique<ipfsel_dataset>();
        h->data = std::move(ing.dataset);
        if (rows_dropped) *rows_dropped = static_cast<size_t>(ing.rows_dropped);
        *out = h.release();
    });
}

ipfsel_status ipfsel_dataset_simulate(const char* design, const char* setting, size_t n, uint64_t seed,
                                      ipfsel_dataset** out) {
    return guarded([&] {
        need(design, "design");
        need(setting, "setting");
        need(out, "out");
        *out = nullptr;
        auto spec = ipfsel::named_design(design, ipfsel::parse_setting(setting));
        spec.n = static_cast<ipfsel::Index>(n);
        auto sim = ipfsel::sample(spec, seed);
        auto h = std::make_unique<ipfsel_dataset>();
        h->data = std::move(sim.dataset);
        h->truth = std::move(sim.truth);
        *out = h.release();
    });
}

void ipfsel_dataset_free(ipfsel_dataset* data) { delete data; }

ipfsel_status ipfsel_dataset_shape(const ipfsel_dataset* data, size_t* n, size_t* p, size_t* modalities) {
    return guarded([&] {
        need(data, "data");
        if (n) *n = static_cast<size_t>(data->data.n());
        if (p) *p = static_cast<size_t>(data->data.p());
        if (modalities) *modalities = static_cast<size_t>(data->data.modalities());
    });
}

const char* ipfsel_dataset_feature_name(const ipfsel_dataset* data, size_t j) {
    if (!data || j >= data->data.feature_names.size()) return nullptr;
    return data->data.feature_names[j].c_str();
}

ipfsel_status ipfsel_dataset_truth(const ipfsel_dataset* data, size_t* indices, size_t capacity, size_t* count) {
    return guarded([&] {
        need(data, "data");
        if (count) *count = data->truth.size();
        for (size_t k = 0; k < capacity && k < data->truth.size(); ++k) {
            need(indices, "indices");
            indices[k] = static_cast<size_t>(data->truth[k]);
        }
    });
}

ipfsel_status ipfsel_lambda_max(const ipfsel_dataset* data, ipfsel_family family, const double* factors,
                                double alpha, double* out) {
    return guarded([&] {
        need(data, "data");
        need(out, "out");
        const auto fam = family_of(family);
        data->data.validate(fam);
        *out = ipfsel::lambda_max(data->data, fam, spec_of(data->data, factors, alpha, 0.0));
    });
}

ipfsel_status ipfsel_fit_create(const ipfsel_dataset* data, ipfsel_family family, const double* factors,
                                double alpha, double lambda, ipfsel_fit** out) {
    return guarded([&] {
        need(data, "data");
        need(out, "out");
        *out = nullptr;
        auto h = std::make_unique<ipfsel_fit>();
        h->fit = ipfsel::fit(data->data, family_of(family), spec_of(data->data, factors, alpha, lambda));
        *out = h.release();
    });
}

void ipfsel_fit_free(ipfsel_fit* fit) { delete fit; }

ipfsel_status ipfsel_fit_coefficients(const ipfsel_fit* fit, double* intercept, double* beta, size_t p) {
    return guarded([&] {
        need(fit, "fit");
        ipfsel::require(p == static_cast<size_t>(fit->fit.beta.size()), "coefficient buffer has the wrong length");
        if (intercept) *intercept = fit->fit.intercept;
        if (p) {
            need(beta, "beta");
            for (size_t j = 0; j < p; ++j) beta[j] = fit->fit.beta[static_cast<Eigen::Index>(j)];
        }
    });
}

int ipfsel_fit_converged(const ipfsel_fit* fit) { return fit && fit->fit.converged ? 1 : 0; }

ipfsel_status ipfsel_fit_predict(const ipfsel_fit* fit, const double* x, size_t n, size_t p, double* out) {
    return guarded([&] {
        need(fit, "fit");
        need(x, "x");
        need(out, "out");
        ipfsel::require(p == static_cast<size_t>(fit->fit.beta.size()), "prediction matrix has the wrong width");
        Eigen::MatrixXd xx =
            Eigen::Map<const Eigen::MatrixXd>(x, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
        const Eigen::VectorXd r = ipfsel::predict(fit->fit, xx);
        for (size_t i = 0; i < n; ++i) out[i] = r[static_cast<Eigen::Index>(i)];
    });
}

ipfsel_status ipfsel_fp_bound(double theta, double tau, int pairs, ipfsel_bound method, double* out) {
    return guarded([&] {
        need(out, "out");
        *out = ipfsel::fp_bound(theta, tau, pairs, method_of(method));
    });
}

ipfsel_status ipfsel_optimal_threshold(double q_avg, long p, int pairs, double v_target, ipfsel_bound method,
                                       double* tau, double* bound_ev, int* achieved) {
    return guarded([&] {
        const auto c = ipfsel::optimal_threshold(q_avg, p, pairs, v_target, method_of(method));
        if (tau) *tau = c.tau;
        if (bound_ev) *bound_ev = c.bound_ev;
        if (achieved) *achieved = c.achieved ? 1 : 0;
    });
}

ipfsel_status ipfsel_simulate(const char* design, const char* setting, size_t n, uint64_t seed,
                              const char* csv_path, const char* truth_path) {
    return guarded([&] {
        need(design, "design");
        need(setting, "setting");
        need(csv_path, "csv_path");
        auto spec = ipfsel::named_design(design, ipfsel::parse_setting(setting));
        spec.n = static_cast<ipfsel::Index>(n);
        const auto sim = ipfsel::sample(spec, seed);
        std::ostringstream csv;
        ipfsel::write_dataset_csv(csv, sim.dataset);
        write_file(csv_path, csv.str());
        if (truth_path) write_file(truth_path, ipfsel::truth_json(sim));
    });
}

ipfsel_status ipfsel_bench(const char* config_path, int reps, uint64_t seed, int jobs, const char* results_path,
                           const char* summary_path, ipfsel_progress_fn progress, void* user) {
    return guarded([&] {
        need(results_path, "results_path");
        ipfsel::BenchConfig cfg = config_path ? ipfsel::BenchConfig::load(config_path) : ipfsel::BenchConfig{};
        if (reps > 0) cfg.replicates = reps;
        if (jobs > 0) cfg.parallelism = jobs;
        cfg.master_seed = seed;
        cfg.validate();

        std::ofstream out(results_path, std::ios::binary);
        if (!out) ipfsel::fail(ipfsel::ErrorKind::io, std::string("cannot open '") + results_path + "' for writing");
        ipfsel::write_results_header(out);
        auto sink = [&](const std::vector<ipfsel::ScoreRow>& rows) {
            ipfsel::write_results_rows(out, rows);
            if (!out) ipfsel::fail(ipfsel::ErrorKind::io, std::string("failed writing '") + results_path + "'");
        };
        std::function<void(const ipfsel::BenchProgress&)> report;
        if (progress)
            report = [&](const ipfsel::BenchProgress& p) {
                std::string msg = p.design + " " + p.setting + " replicate " + std::to_string(p.replicate);
                if (p.failed) msg += " FAILED " + p.message;
                progress(p.done, p.total, msg.c_str(), user);
            };
        const auto rows = ipfsel::run_benchmark(cfg, sink, report);
        out.close();
        if (summary_path) write_file(summary_path, ipfsel::summary_json(rows));
    });
}

void ipfsel_analyze_options_init(ipfsel_analyze_options* opts) {
    if (!opts) return;
    opts->selector = "ipf";
    opts->threshold = "optimal";
    opts->v_target = 2.0;
    opts->alpha = 1.0;
    opts->pairs = 50;
    opts->k_folds = 5;
    opts->cv_repeats = 10;
    opts->method = IPFSEL_BOUND_RCONCAVE;
    opts->seed = 0;
    opts->jobs = 1;
    opts->lambda = 0.0;
    opts->factors = nullptr;
    opts->factor_count = 0;
}

ipfsel_status ipfsel_analyze(const char* csv_path, const char* schema_path, const ipfsel_analyze_options* opts,
                             const char* report_path) {
    return guarded([&] {
        need(csv_path, "csv_path");
        need(schema_path, "schema_path");
        need(opts, "opts");
        need(report_path, "report_path");
        need(opts->selector, "selector");
        need(opts->threshold, "threshold");
        ipfsel::AnalyzeRequest req;
        req.selector = ipfsel::parse_selector(opts->selector);
        req.threshold = ipfsel::parse_threshold(opts->threshold);
        req.settings = settings_of(*opts);
        req.seed = opts->seed;
        const auto ing = ipfsel::ingest_table(ipfsel::CsvTable::read(csv_path), ipfsel::ClinicalSchema::load(schema_path));
        const auto res = ipfsel::analyze(ing, req);
        write_file(report_path, ipfsel::analyze_report_json(res, req, ing.dataset));
    });
}

ipfsel_status ipfsel_stabsel(const char* csv_path, const char* schema_path, const ipfsel_analyze_options* opts,
                             const char* out_path) {
    return guarded([&] {
        need(csv_path, "csv_path");
        need(schema_path, "schema_path");
        need(opts, "opts");
        need(out_path, "out_path");
        need(opts->selector, "selector");
        ipfsel::FrequencyRequest req;
        req.selector = ipfsel::parse_selector(opts->selector);
        req.settings = settings_of(*opts);
        req.seed = opts->seed;
        const auto ing = ipfsel::ingest_table(ipfsel::CsvTable::read(csv_path), ipfsel::ClinicalSchema::load(schema_path));
        if (opts->lambda > 0.0) {
            req.lambda = opts->lambda;
            if (opts->factors) {
                ipfsel::require(opts->factor_count == static_cast<std::size_t>(ing.dataset.modalities()),
                                "factor count does not match the number of modalities");
                req.factors = ipfsel::FactorTuple(opts->factors, opts->factors + opts->factor_count);
            }
        }
        const auto run = ipfsel::frequencies_only(ing.dataset, req);
        write_file(out_path, ipfsel::frequencies_json(run, ing.dataset, ing.rows_dropped, req));
    });
}

} // extern "C"
