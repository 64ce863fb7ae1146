#include "ipfsel/harness.hpp"

#include "ipfsel/error.hpp"
#include "ipfsel/metrics.hpp"
#include "ipfsel/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

namespace ipfsel {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(SelectorKind s) noexcept { return s == SelectorKind::lasso ? "lasso" : "ipf"; }

SelectorKind parse_selector(const std::string& s) {
    if (s == "lasso") return SelectorKind::lasso;
    if (s == "ipf") return SelectorKind::ipf;
    fail(ErrorKind::invalid_input, "unknown selector '" + s + "' (expected lasso or ipf)");
}

std::string ThresholdKind::label() const {
    if (optimal) return "optimal";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", value);
    return buf;
}

ThresholdKind parse_threshold(const std::string& s) {
    if (s == "optimal") return ThresholdKind::inverted();
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        fail(ErrorKind::invalid_input, "threshold must be a number or 'optimal', got '" + s + "'");
    require(v > 0.0 && v <= 1.0, "threshold must lie in (0, 1]");
    return ThresholdKind::fixed(v);
}

std::string ProcedureSpec::name() const {
    std::string base = selector == SelectorKind::lasso ? "LASSO" : "IPF_LASSO";
    if (threshold.optimal) return base + "_OPTI";
    const long pct = std::lround(threshold.value * 100.0);
    if (std::abs(threshold.value * 100.0 - static_cast<double>(pct)) < 1e-9) return base + std::to_string(pct);
    return base + "_" + format_double(threshold.value);
}

namespace {

template <class T>
T get_as(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_input, std::string("config field '") + key + "': " + e.what());
    }
}

FactorTuple ones(Index m) { return FactorTuple(static_cast<std::size_t>(m), 1.0); }

std::vector<FactorTuple> selector_grid(SelectorKind s, Index modalities) {
    if (s == SelectorKind::lasso) return {ones(modalities)};
    require(modalities == 2, "the ipf selector needs exactly two modalities, data has " +
                                 std::to_string(modalities));
    return default_factor_grid();
}

TuneGrid make_grid(SelectorKind s, const Dataset& data, const ProcedureSettings& st, std::uint64_t seed) {
    TuneGrid g;
    g.factor_combinations = selector_grid(s, data.modalities());
    g.lambda_path_length = st.lambda_path_length;
    g.lambda_min_ratio = st.lambda_min_ratio;
    g.k_folds = st.k_folds;
    g.repeats = st.cv_repeats;
    g.alpha = st.alpha;
    g.seed = derive_seed(seed, {stream::folds});
    g.jobs = st.jobs;
    return g;
}

FrequencyProfile frequencies_for(const Dataset& data, const FactorTuple& factors, double lambda,
                                 const ProcedureSettings& st, std::uint64_t seed) {
    PenaltySpec spec;
    spec.factors = factors;
    spec.alpha = st.alpha;
    spec.lambda = lambda;
    const SubsamplePlan plan = draw_plan(data.n(), st.pairs, derive_seed(seed, {stream::subsamples}));
    return estimate_frequencies(data, make_fit_selector(Family::logistic, spec), plan, st.jobs);
}

// The lasso grid is the first combination of the ipf grid, so a lasso
// tuning can be read off an ipf tuning on the same folds.
TunedConfig lasso_from_ipf(const TunedConfig& ipf) {
    const CombinationResult& row = ipf.error_table.front();
    if (!(row.best_lambda > 0.0)) fail(ErrorKind::tuning_failed, "lasso combination could not be cross-validated");
    TunedConfig out;
    out.best_factors = row.factors;
    out.best_lambda = row.best_lambda;
    out.cv_error = row.best_error;
    out.error_table = {row};
    out.stratified = ipf.stratified;
    out.nonconverged = row.nonconverged;
    return out;
}

[[noreturn]] void rethrow_with_context(const std::string& context) {
    try {
        throw;
    } catch (const Error& e) {
        throw Error(e.kind(), context + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorKind::runtime, context + ": " + e.what());
    }
}

std::string flags_for(const SelectorRun& run, const SelectionOutcome& outcome, bool optimal) {
    std::vector<std::string> f;
    if (run.tuned.nonconverged > 0) f.push_back("cv_nonconv=" + std::to_string(run.tuned.nonconverged));
    if (!run.tuned.stratified) f.push_back("unstratified");
    if (run.profile.nonconverged > 0) f.push_back("ss_nonconv=" + std::to_string(run.profile.nonconverged));
    if (run.profile.failures > 0) f.push_back("ss_failed=" + std::to_string(run.profile.failures));
    if (optimal && run.profile.q_avg == 0.0) f.push_back("degenerate");
    else if (!outcome.target_achieved) f.push_back("target_missed");
    if (f.empty()) return "ok";
    std::string s = f.front();
    for (std::size_t k = 1; k < f.size(); ++k) s += ";" + f[k];
    return s;
}

std::string error_flag(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const Error& err) {
        switch (err.kind()) {
        case ErrorKind::invalid_input: return "failed:invalid_input";
        case ErrorKind::region: return "failed:region";
        case ErrorKind::tuning_failed: return "failed:tuning";
        case ErrorKind::io: return "failed:io";
        case ErrorKind::runtime: break;
        }
        return "failed:runtime";
    } catch (...) {
        return "failed:runtime";
    }
}

std::string error_text(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const std::exception& err) {
        return err.what();
    } catch (...) {
        return "unknown error";
    }
}

std::string join_factors(const FactorTuple& f) {
    std::string s;
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (k) s += ';';
        s += format_double(f[k]);
    }
    return s;
}

double parse_number(const std::string& s, const char* what) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        fail(ErrorKind::invalid_input, std::string("bad ") + what + " value '" + s + "' in results");
    return v;
}

ordered_json five_json(const FiveNumber& f) {
    return ordered_json{{"min", f.min}, {"q1", f.q1}, {"median", f.median}, {"q3", f.q3}, {"max", f.max}};
}

} // namespace

BenchConfig BenchConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_input, std::string("bench config is not valid JSON: ") + e.what());
    }
    require(j.is_object(), "bench config must be a JSON object");
    BenchConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const json& v = it.value();
        if (k == "designs") {
            c.designs = get_as<std::vector<std::string>>(j, "designs");
        } else if (k == "settings") {
            c.settings.clear();
            for (const auto& s : get_as<std::vector<std::string>>(j, "settings")) c.settings.push_back(parse_setting(s));
        } else if (k == "replicates") {
            c.replicates = get_as<int>(j, "replicates");
        } else if (k == "B" || k == "pairs") {
            c.pairs = get_as<int>(j, k.c_str());
        } else if (k == "V_target" || k == "v_target") {
            c.v_target = get_as<double>(j, k.c_str());
        } else if (k == "thresholds") {
            require(v.is_array(), "config field 'thresholds' must be an array");
            c.thresholds.clear();
            for (const auto& t : v) {
                if (t.is_string()) c.thresholds.push_back(parse_threshold(t.get<std::string>()));
                else if (t.is_number()) c.thresholds.push_back(parse_threshold(format_double(t.get<double>())));
                else fail(ErrorKind::invalid_input, "thresholds entries must be numbers or \"optimal\"");
            }
        } else if (k == "selectors") {
            c.selectors.clear();
            for (const auto& s : get_as<std::vector<std::string>>(j, "selectors")) c.selectors.push_back(parse_selector(s));
        } else if (k == "alpha") {
            c.alpha = get_as<double>(j, "alpha");
        } else if (k == "master_seed") {
            if (!v.is_null()) c.master_seed = get_as<std::uint64_t>(j, "master_seed");
        } else if (k == "parallelism") {
            c.parallelism = get_as<int>(j, "parallelism");
        } else if (k == "k_folds") {
            c.k_folds = get_as<int>(j, "k_folds");
        } else if (k == "cv_repeats") {
            c.cv_repeats = get_as<int>(j, "cv_repeats");
        } else if (k == "lambda_path_length") {
            c.lambda_path_length = get_as<int>(j, "lambda_path_length");
        } else if (k == "lambda_min_ratio") {
            c.lambda_min_ratio = get_as<double>(j, "lambda_min_ratio");
        } else if (k == "bound_method") {
            const auto m = get_as<std::string>(j, "bound_method");
            if (m == "mb") c.bound_method = BoundMethod::mb;
            else if (m == "r-concave" || m == "r_concave") c.bound_method = BoundMethod::r_concave;
            else fail(ErrorKind::invalid_input, "bound_method must be 'mb' or 'r-concave'");
        } else if (k == "n") {
            c.n = get_as<Index>(j, "n");
        } else if (k == "beta") {
            c.beta = get_as<double>(j, "beta");
        } else if (k == "subsample_tuning") {
            c.subsample_tuning = get_as<std::string>(j, "subsample_tuning");
        } else {
            fail(ErrorKind::invalid_input, "unknown bench config field '" + k + "'");
        }
    }
    c.validate();
    return c;
}

BenchConfig BenchConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::invalid_input, "cannot open bench config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void BenchConfig::validate() const {
    require(replicates >= 1, "replicates must be at least 1");
    require(!thresholds.empty(), "thresholds must not be empty");
    require(!selectors.empty(), "selectors must not be empty");
    require(!designs.empty(), "designs must not be empty");
    require(!settings.empty(), "settings must not be empty");
    require(pairs >= 1, "B must be at least 1");
    require(v_target > 0.0, "V_target must be positive");
    require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
    require(parallelism >= 1, "parallelism must be at least 1");
    require(n >= 4, "n must be at least 4");
    if (subsample_tuning == "per_subsample")
        fail(ErrorKind::invalid_input, "subsample_tuning 'per_subsample' is not implemented");
    require(subsample_tuning == "fixed", "subsample_tuning must be 'fixed' or 'per_subsample'");
    for (const auto& t : thresholds)
        require(t.optimal || (t.value > 0.0 && t.value <= 1.0), "fixed thresholds must lie in (0, 1]");
    for (const auto& d : designs) {
        DesignSpec spec = named_design(d);
        spec.n = n;
        spec.beta = beta;
        spec.validate();
    }
    TuneGrid g;
    g.factor_combinations = {FactorTuple{1.0, 1.0}};
    g.lambda_path_length = lambda_path_length;
    g.lambda_min_ratio = lambda_min_ratio;
    g.k_folds = k_folds;
    g.repeats = cv_repeats;
    g.alpha = alpha;
    g.validate(2);
}

std::vector<ProcedureSpec> BenchConfig::procedures() const {
    std::vector<ProcedureSpec> out;
    for (auto s : selectors)
        for (const auto& t : thresholds) out.push_back({s, t});
    return out;
}

ProcedureSettings ProcedureSettings::from(const BenchConfig& cfg) {
    ProcedureSettings s;
    s.pairs = cfg.pairs;
    s.v_target = cfg.v_target;
    s.alpha = cfg.alpha;
    s.k_folds = cfg.k_folds;
    s.cv_repeats = cfg.cv_repeats;
    s.lambda_path_length = cfg.lambda_path_length;
    s.lambda_min_ratio = cfg.lambda_min_ratio;
    s.bound_method = cfg.bound_method;
    return s;
}

SelectorRun run_selector(const Dataset& data, SelectorKind selector, const ProcedureSettings& settings,
                         std::uint64_t seed) {
    SelectorRun run;
    run.selector = selector;
    try {
        run.tuned = tune(data, make_grid(selector, data, settings, seed));
        run.profile = frequencies_for(data, run.tuned.best_factors, run.tuned.best_lambda, settings, seed);
    } catch (...) {
        rethrow_with_context(std::string("selector ") + to_string(selector));
    }
    return run;
}

SelectionOutcome apply_threshold(const SelectorRun& run, const ThresholdKind& threshold,
                                 const ProcedureSettings& settings, Index p) {
    (void)p;
    SelectionOutcome out = threshold.optimal
                               ? select_optimal(run.profile, settings.pairs, settings.v_target, settings.bound_method)
                               : stable_set(run.profile, threshold.value, settings.pairs, settings.bound_method);
    out.procedure = ProcedureSpec{run.selector, threshold}.name();
    return out;
}

ProcedureResult run_procedure(const Dataset& data, const ProcedureSpec& procedure,
                              const ProcedureSettings& settings, std::uint64_t seed) {
    ProcedureResult r;
    try {
        r.run = run_selector(data, procedure.selector, settings, seed);
        r.outcome = apply_threshold(r.run, procedure.threshold, settings, data.p());
    } catch (...) {
        rethrow_with_context("procedure " + procedure.name());
    }
    return r;
}

std::uint64_t replicate_seed(std::uint64_t master, const std::string& design, Setting setting, int replicate) {
    std::uint64_t tag = 0;
    for (unsigned char c : design) tag = tag * 131 + c;
    return derive_seed(master, {stream::simulate, tag, static_cast<std::uint64_t>(setting),
                                static_cast<std::uint64_t>(replicate)});
}

std::vector<ScoreRow> run_replicate(const BenchConfig& cfg, const std::string& design, Setting setting,
                                    int replicate, int inner_jobs) {
    require(cfg.master_seed.has_value(), "a master seed is required");
    const std::uint64_t seed = replicate_seed(*cfg.master_seed, design, setting, replicate);
    ProcedureSettings st = ProcedureSettings::from(cfg);
    st.jobs = inner_jobs;

    std::vector<ScoreRow> rows;
    const auto procs = cfg.procedures();
    for (const auto& pr : procs) {
        ScoreRow r;
        r.design = design;
        r.setting = to_string(setting);
        r.procedure = pr.name();
        r.replicate = replicate;
        rows.push_back(std::move(r));
    }
    auto mark_failed = [&](SelectorKind* only, const std::exception_ptr& e) {
        for (std::size_t k = 0; k < procs.size(); ++k) {
            if (only && procs[k].selector != *only) continue;
            rows[k].failed = true;
            rows[k].converged_flags = error_flag(e);
            rows[k].message = error_text(e);
        }
    };

    SimulatedDataset sim;
    try {
        DesignSpec spec = named_design(design, setting);
        spec.n = cfg.n;
        spec.beta = cfg.beta;
        sim = sample(spec, seed);
    } catch (...) {
        mark_failed(nullptr, std::current_exception());
        return rows;
    }
    const Dataset& data = sim.dataset;

    // Tune ipf first so lasso can reuse its first grid row on identical folds.
    std::map<SelectorKind, SelectorRun> runs;
    std::map<SelectorKind, std::exception_ptr> errors;
    std::vector<SelectorKind> order = cfg.selectors;
    std::stable_sort(order.begin(), order.end(), [](auto a, auto b) { return a == SelectorKind::ipf && b != a; });
    order.erase(std::unique(order.begin(), order.end()), order.end());
    for (SelectorKind s : order) {
        try {
            SelectorRun run;
            run.selector = s;
            try {
                const bool reuse = s == SelectorKind::lasso && runs.count(SelectorKind::ipf) &&
                                   runs[SelectorKind::ipf].tuned.error_table.front().factors == ones(data.modalities());
                run.tuned = reuse ? lasso_from_ipf(runs[SelectorKind::ipf].tuned)
                                  : tune(data, make_grid(s, data, st, seed));
                run.profile = frequencies_for(data, run.tuned.best_factors, run.tuned.best_lambda, st, seed);
            } catch (...) {
                rethrow_with_context(std::string("selector ") + to_string(s));
            }
            runs[s] = std::move(run);
        } catch (...) {
            errors[s] = std::current_exception();
        }
    }

    for (std::size_t k = 0; k < procs.size(); ++k) {
        const auto s = procs[k].selector;
        if (errors.count(s)) {
            SelectorKind only = s;
            mark_failed(&only, errors[s]);
            continue;
        }
        try {
            const SelectorRun& run = runs.at(s);
            const SelectionOutcome out = apply_threshold(run, procs[k].threshold, st, data.p());
            ScoreRow& r = rows[k];
            r.tpp = tpp(out.stable_set, sim.truth);
            r.fp = static_cast<long>(false_positives(out.stable_set, sim.truth));
            r.threshold = out.threshold;
            r.q_avg = run.profile.q_avg;
            r.chosen_factors = run.tuned.best_factors;
            r.bound_ev = out.bound_ev;
            r.converged_flags = flags_for(run, out, procs[k].threshold.optimal);
        } catch (...) {
            rows[k].failed = true;
            rows[k].converged_flags = error_flag(std::current_exception());
            rows[k].message = error_text(std::current_exception());
        }
    }
    return rows;
}

std::vector<ScoreRow> run_benchmark(const BenchConfig& cfg,
                                    const std::function<void(const std::vector<ScoreRow>&)>& sink,
                                    const std::function<void(const BenchProgress&)>& progress) {
    cfg.validate();
    require(cfg.master_seed.has_value(), "a master seed is required");
    struct Cell {
        std::string design;
        Setting setting;
        int replicate;
    };
    std::vector<Cell> cells;
    for (const auto& d : cfg.designs)
        for (auto s : cfg.settings)
            for (int r = 0; r < cfg.replicates; ++r) cells.push_back({d, s, r});

    std::vector<std::vector<ScoreRow>> slots(cells.size());
    std::vector<char> ready(cells.size(), 0);
    std::size_t flushed = 0;
    long done = 0;
    std::mutex mu;

    parallel_for(cells.size(), cfg.parallelism, [&](std::size_t i) {
        const Cell& c = cells[i];
        std::vector<ScoreRow> rows = run_replicate(cfg, c.design, c.setting, c.replicate, 1);
        const bool failed = std::any_of(rows.begin(), rows.end(), [](const ScoreRow& r) { return r.failed; });
        std::lock_guard<std::mutex> lock(mu);
        slots[i] = std::move(rows);
        ready[i] = 1;
        ++done;
        if (progress) {
            BenchProgress p;
            p.done = done;
            p.total = static_cast<long>(cells.size());
            p.design = c.design;
            p.setting = to_string(c.setting);
            p.replicate = c.replicate;
            p.failed = failed;
            if (failed)
                for (const auto& r : slots[i])
                    if (r.failed) {
                        p.message = r.procedure + ": " + r.message;
                        break;
                    }
            progress(p);
        }
        while (flushed < cells.size() && ready[flushed]) {
            if (sink) sink(slots[flushed]);
            ++flushed;
        }
    });

    std::vector<ScoreRow> all;
    for (auto& s : slots)
        for (auto& r : s) all.push_back(std::move(r));
    return all;
}

const char* const results_header =
    "design,setting,procedure,replicate,tpp,fp,threshold,q_avg,chosen_factors,bound_E_V,converged_flags";

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_results_header(std::ostream& out) { out << results_header << '\n'; }

void write_results_rows(std::ostream& out, const std::vector<ScoreRow>& rows) {
    for (const auto& r : rows) {
        out << r.design << ',' << r.setting << ',' << r.procedure << ',' << r.replicate << ','
            << (r.tpp ? format_double(*r.tpp) : "NA") << ',' << (r.fp ? std::to_string(*r.fp) : "NA") << ','
            << format_double(r.threshold) << ',' << format_double(r.q_avg) << ','
            << (r.chosen_factors.empty() ? "NA" : join_factors(r.chosen_factors)) << ','
            << format_double(r.bound_ev) << ',' << r.converged_flags << '\n';
    }
    out.flush();
}

std::vector<ScoreRow> read_results(std::istream& in) {
    const CsvTable t = CsvTable::parse(in);
    std::string header;
    for (std::size_t k = 0; k < t.header.size(); ++k) header += (k ? "," : "") + t.header[k];
    require(header == results_header, "results CSV has an unexpected header");
    std::vector<ScoreRow> rows;
    for (const auto& f : t.rows) {
        ScoreRow r;
        r.design = f[0];
        r.setting = f[1];
        r.procedure = f[2];
        r.replicate = static_cast<int>(parse_number(f[3], "replicate"));
        if (f[4] != "NA") r.tpp = parse_number(f[4], "tpp");
        if (f[5] != "NA") r.fp = static_cast<long>(parse_number(f[5], "fp"));
        r.threshold = parse_number(f[6], "threshold");
        r.q_avg = parse_number(f[7], "q_avg");
        if (f[8] != "NA") {
            std::stringstream ss(f[8]);
            std::string part;
            while (std::getline(ss, part, ';')) r.chosen_factors.push_back(parse_number(part, "factor"));
        }
        r.bound_ev = parse_number(f[9], "bound_E_V");
        r.converged_flags = f[10];
        r.failed = f[10].rfind("failed", 0) == 0;
        rows.push_back(std::move(r));
    }
    return rows;
}

FiveNumber five_number(std::vector<double> v) {
    require(!v.empty(), "five-number summary of an empty sample");
    std::sort(v.begin(), v.end());
    auto q = [&](double prob) {
        const double h = (static_cast<double>(v.size()) - 1.0) * prob;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    return {v.front(), q(0.25), q(0.5), q(0.75), v.back()};
}

std::string summary_json(const std::vector<ScoreRow>& rows) {
    struct Acc {
        std::string design, setting, procedure;
        long count = 0, failed = 0;
        std::vector<double> tpp, fp, threshold, q_avg, bound;
    };
    std::vector<Acc> cells;
    std::map<std::string, std::size_t> index;
    for (const auto& r : rows) {
        const std::string key = r.design + '\x1f' + r.setting + '\x1f' + r.procedure;
        auto [it, fresh] = index.emplace(key, cells.size());
        if (fresh) {
            cells.emplace_back();
            cells.back().design = r.design;
            cells.back().setting = r.setting;
            cells.back().procedure = r.procedure;
        }
        Acc& a = cells[it->second];
        ++a.count;
        if (r.failed) {
            ++a.failed;
            continue;
        }
        if (r.tpp) a.tpp.push_back(*r.tpp);
        if (r.fp) a.fp.push_back(static_cast<double>(*r.fp));
        a.threshold.push_back(r.threshold);
        a.q_avg.push_back(r.q_avg);
        a.bound.push_back(r.bound_ev);
    }
    ordered_json out = ordered_json::array();
    for (const auto& a : cells) {
        ordered_json c;
        c["design"] = a.design;
        c["setting"] = a.setting;
        c["procedure"] = a.procedure;
        c["replicates"] = a.count;
        c["failed"] = a.failed;
        auto add = [&](const char* name, const std::vector<double>& v) {
            if (v.empty()) {
                c[name] = nullptr;
                return;
            }
            ordered_json s = five_json(five_number(v));
            double sum = 0.0;
            for (double x : v) sum += x;
            s["mean"] = sum / static_cast<double>(v.size());
            c[name] = std::move(s);
        };
        add("tpp", a.tpp);
        add("fp", a.fp);
        add("threshold", a.threshold);
        add("q_avg", a.q_avg);
        add("bound_E_V", a.bound);
        out.push_back(std::move(c));
    }
    return out.dump(2) + "\n";
}

AnalyzeResult analyze(const Ingested& data, const AnalyzeRequest& request) {
    AnalyzeResult out;
    out.result = run_procedure(data.dataset, ProcedureSpec{request.selector, request.threshold}, request.settings,
                               request.seed);
    out.rows_dropped = data.rows_dropped;
    out.feature_names = data.dataset.feature_names;
    return out;
}

namespace {

ordered_json frequency_list(const FrequencyProfile& profile, const Dataset& data) {
    std::vector<Index> order;
    for (Index j = 0; j < data.p(); ++j)
        if (profile.counts[static_cast<std::size_t>(j)] > 0) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return profile.counts[static_cast<std::size_t>(a)] > profile.counts[static_cast<std::size_t>(b)];
    });
    ordered_json list = ordered_json::array();
    const auto modality = data.column_modality();
    for (Index j : order)
        list.push_back(ordered_json{{"name", data.feature_names[static_cast<std::size_t>(j)]},
                                    {"index", j},
                                    {"modality", modality[static_cast<std::size_t>(j)] + 1},
                                    {"frequency", profile.freq[j]},
                                    {"count", profile.counts[static_cast<std::size_t>(j)]}});
    return list;
}

ordered_json data_block(const Dataset& data, Index rows_dropped) {
    ordered_json d;
    d["n"] = data.n();
    d["p"] = data.p();
    d["modality_sizes"] = data.modality_sizes;
    d["rows_dropped"] = rows_dropped;
    return d;
}

ordered_json tuning_block(const TunedConfig& t) {
    ordered_json j;
    j["factors"] = t.best_factors;
    j["lambda"] = t.best_lambda;
    j["cv_error"] = t.cv_error;
    j["stratified_folds"] = t.stratified;
    j["nonconverged_fold_fits"] = t.nonconverged;
    ordered_json table = ordered_json::array();
    for (const auto& row : t.error_table)
        table.push_back(ordered_json{{"factors", row.factors}, {"lambda", row.best_lambda}, {"cv_error", row.best_error}});
    j["grid"] = std::move(table);
    return j;
}

ordered_json stability_block(const FrequencyProfile& f, int pairs) {
    ordered_json j;
    j["pairs"] = pairs;
    j["fits"] = f.fits;
    j["q_avg"] = f.q_avg;
    j["failed_fits"] = f.failures;
    j["nonconverged_fits"] = f.nonconverged;
    return j;
}

} // namespace

std::string analyze_report_json(const AnalyzeResult& result, const AnalyzeRequest& request, const Dataset& data) {
    const SelectionOutcome& o = result.result.outcome;
    ordered_json j;
    j["procedure"] = o.procedure;
    j["selector"] = to_string(request.selector);
    j["threshold_kind"] = request.threshold.label();
    j["alpha"] = request.settings.alpha;
    j["seed"] = request.seed;
    j["data"] = data_block(data, result.rows_dropped);
    j["tuning"] = tuning_block(result.result.run.tuned);
    j["stability"] = stability_block(result.result.run.profile, request.settings.pairs);
    j["threshold"] = o.threshold;
    j["bound_method"] = to_string(o.method);
    j["bound_E_V"] = o.bound_ev;
    if (request.threshold.optimal) {
        j["v_target"] = o.v_target;
        j["target_achieved"] = o.target_achieved;
    }
    ordered_json selected = ordered_json::array();
    for (Index k : o.stable_set)
        selected.push_back(ordered_json{{"name", data.feature_names[static_cast<std::size_t>(k)]},
                                        {"index", k},
                                        {"frequency", result.result.run.profile.freq[k]}});
    j["selected"] = std::move(selected);
    j["empty_selection"] = o.stable_set.empty();
    j["frequencies"] = frequency_list(result.result.run.profile, data);
    return j.dump(2) + "\n";
}

SelectorRun frequencies_only(const Dataset& data, const FrequencyRequest& request) {
    if (!request.lambda) return run_selector(data, request.selector, request.settings, request.seed);
    require(*request.lambda > 0.0, "lambda must be positive");
    SelectorRun run;
    run.selector = request.selector;
    run.tuned.best_factors = request.factors ? *request.factors : ones(data.modalities());
    require(static_cast<Index>(run.tuned.best_factors.size()) == data.modalities(),
            "factor count does not match the number of modalities");
    run.tuned.best_lambda = *request.lambda;
    run.tuned.cv_error = std::nan("");
    run.profile = frequencies_for(data, run.tuned.best_factors, run.tuned.best_lambda, request.settings, request.seed);
    return run;
}

std::string frequencies_json(const SelectorRun& run, const Dataset& data, Index rows_dropped,
                             const FrequencyRequest& request) {
    ordered_json j;
    j["selector"] = to_string(request.selector);
    j["alpha"] = request.settings.alpha;
    j["seed"] = request.seed;
    j["data"] = data_block(data, rows_dropped);
    if (request.lambda) {
        j["configuration"] = ordered_json{{"factors", run.tuned.best_factors}, {"lambda", run.tuned.best_lambda}};
    } else {
        j["tuning"] = tuning_block(run.tuned);
    }
    j["stability"] = stability_block(run.profile, request.settings.pairs);
    j["frequencies"] = frequency_list(run.profile, data);
    return j.dump(2) + "\n";
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    out << 'y';
    for (const auto& name : data.feature_names) out << ',' << name;
    out << '\n';
    for (Index i = 0; i < data.n(); ++i) {
        out << format_double(data.y[i]);
        for (Index j = 0; j < data.p(); ++j) out << ',' << format_double(data.x(i, j));
        out << '\n';
    }
    out.flush();
}

std::string truth_json(const SimulatedDataset& sim) {
    ordered_json j;
    j["design"] = sim.design.id;
    j["setting"] = to_string(sim.design.setting);
    j["seed"] = sim.seed;
    j["n"] = sim.design.n;
    j["p1"] = sim.design.p1;
    j["p2"] = sim.design.p2;
    j["beta"] = sim.design.beta;
    j["active_indices"] = sim.truth;
    ordered_json names = ordered_json::array();
    for (Index k : sim.truth) names.push_back(sim.dataset.feature_names[static_cast<std::size_t>(k)]);
    j["active_names"] = std::move(names);
    return j.dump(2) + "\n";
}

} // namespace ipfsel
