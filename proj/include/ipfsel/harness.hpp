#pragma once

#include "ipfsel/bounds.hpp"
#include "ipfsel/simgen.hpp"
#include "ipfsel/stabsel.hpp"
#include "ipfsel/table.hpp"
#include "ipfsel/tuner.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ipfsel {

enum class SelectorKind { lasso, ipf };

const char* to_string(SelectorKind s) noexcept;
SelectorKind parse_selector(const std::string& s);

// A fixed frequency cutoff or the optimal inversion at the configured V.
struct ThresholdKind {
    bool optimal = false;
    double value = 0.0;

    static ThresholdKind fixed(double tau) { return {false, tau}; }
    static ThresholdKind inverted() { return {true, 0.0}; }
    std::string label() const;  // "0.70", "0.80", "optimal"
};

ThresholdKind parse_threshold(const std::string& s);

struct ProcedureSpec {
    SelectorKind selector = SelectorKind::lasso;
    ThresholdKind threshold;

    // LASSO70, IPF_LASSO80, LASSO_OPTI, ...
    std::string name() const;
};

struct BenchConfig {
    std::vector<std::string> designs{"A", "B", "C", "D", "E", "F", "G", "H", "I"};
    std::vector<Setting> settings{Setting::independent, Setting::correlated};
    int replicates = 100;
    int pairs = 50;
    double v_target = 2.0;
    std::vector<ThresholdKind> thresholds{ThresholdKind::fixed(0.7), ThresholdKind::fixed(0.8),
                                          ThresholdKind::inverted()};
    std::vector<SelectorKind> selectors{SelectorKind::lasso, SelectorKind::ipf};
    double alpha = 1.0;
    std::optional<std::uint64_t> master_seed;
    int parallelism = 1;

    // Tuning and data knobs that the procedures share.
    int k_folds = 5;
    int cv_repeats = 10;
    int lambda_path_length = 100;
    double lambda_min_ratio = 0.01;
    BoundMethod bound_method = BoundMethod::r_concave;
    Index n = 100;
    double beta = 1.0;
    // Only "fixed" is implemented: tune once, reuse for every subsample.
    std::string subsample_tuning = "fixed";

    static BenchConfig from_json_text(const std::string& text);
    static BenchConfig load(const std::string& path);
    void validate() const;

    // Selectors in outer order, thresholds inner.
    std::vector<ProcedureSpec> procedures() const;
};

// Result of tuning one selector and running stability selection with the
// tuned configuration. Thresholds are applied afterwards.
struct SelectorRun {
    SelectorKind selector = SelectorKind::lasso;
    TunedConfig tuned;
    FrequencyProfile profile;
};

struct ProcedureSettings {
    int pairs = 50;
    double v_target = 2.0;
    double alpha = 1.0;
    int k_folds = 5;
    int cv_repeats = 10;
    int lambda_path_length = 100;
    double lambda_min_ratio = 0.01;
    BoundMethod bound_method = BoundMethod::r_concave;
    int jobs = 1;

    static ProcedureSettings from(const BenchConfig& cfg);
};

// Tunes with the selector's grid ({1,...,1} for lasso, the eleven
// combinations for ipf) on folds derived from `seed`, then estimates
// frequencies on the subsample plan derived from `seed`.
SelectorRun run_selector(const Dataset& data, SelectorKind selector, const ProcedureSettings& settings,
                         std::uint64_t seed);

SelectionOutcome apply_threshold(const SelectorRun& run, const ThresholdKind& threshold,
                                 const ProcedureSettings& settings, Index p);

struct ProcedureResult {
    SelectionOutcome outcome;
    SelectorRun run;
};

ProcedureResult run_procedure(const Dataset& data, const ProcedureSpec& procedure,
                              const ProcedureSettings& settings, std::uint64_t seed);

struct ScoreRow {
    std::string design;
    std::string setting;
    std::string procedure;
    int replicate = 0;
    std::optional<double> tpp;  // empty when failed or no truth
    std::optional<long> fp;
    double threshold = 0.0;
    double q_avg = 0.0;
    FactorTuple chosen_factors;
    double bound_ev = 0.0;
    std::string converged_flags = "ok";
    bool failed = false;
    std::string message;  // failure text for logs, not serialized

    bool operator==(const ScoreRow&) const = default;
};

// Seed of one simulated dataset; all six procedures of a replicate share it.
std::uint64_t replicate_seed(std::uint64_t master, const std::string& design, Setting setting,
                             int replicate);

// Rows for every procedure on one simulated replicate.
std::vector<ScoreRow> run_replicate(const BenchConfig& cfg, const std::string& design, Setting setting,
                                    int replicate, int inner_jobs = 1);

struct BenchProgress {
    long done = 0;
    long total = 0;
    std::string design;
    std::string setting;
    int replicate = 0;
    bool failed = false;
    std::string message;
};

// Runs every design x setting x replicate cell. Rows reach `sink` in cell
// order as soon as the ordered prefix is complete, independent of `jobs`.
std::vector<ScoreRow> run_benchmark(const BenchConfig& cfg,
                                    const std::function<void(const std::vector<ScoreRow>&)>& sink = {},
                                    const std::function<void(const BenchProgress&)>& progress = {});

extern const char* const results_header;

std::string format_double(double v);
void write_results_header(std::ostream& out);
void write_results_rows(std::ostream& out, const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> read_results(std::istream& in);

struct FiveNumber {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Type-7 quantiles; values must be nonempty.
FiveNumber five_number(std::vector<double> values);

// Per design x setting x procedure boxplot statistics, as JSON text.
std::string summary_json(const std::vector<ScoreRow>& rows);

struct AnalyzeRequest {
    SelectorKind selector = SelectorKind::ipf;
    ThresholdKind threshold = ThresholdKind::inverted();
    ProcedureSettings settings;
    std::uint64_t seed = 0;
};

struct AnalyzeResult {
    ProcedureResult result;
    Index rows_dropped = 0;
    std::vector<std::string> feature_names;
};

AnalyzeResult analyze(const Ingested& data, const AnalyzeRequest& request);
std::string analyze_report_json(const AnalyzeResult& result, const AnalyzeRequest& request,
                                const Dataset& data);

struct FrequencyRequest {
    SelectorKind selector = SelectorKind::ipf;
    ProcedureSettings settings;
    std::uint64_t seed = 0;
    std::optional<double> lambda;          // skip tuning when set
    std::optional<FactorTuple> factors;    // with lambda
};

SelectorRun frequencies_only(const Dataset& data, const FrequencyRequest& request);
// `y` then every feature column, header from the feature names.
void write_dataset_csv(std::ostream& out, const Dataset& data);
std::string truth_json(const SimulatedDataset& sim);

std::string frequencies_json(const SelectorRun& run, const Dataset& data, Index rows_dropped,
                             const FrequencyRequest& request);

} // namespace ipfsel
