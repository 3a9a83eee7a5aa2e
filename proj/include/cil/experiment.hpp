#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cil/dataset.hpp"
#include "cil/learners.hpp"
#include "cil/membudget.hpp"
#include "cil/netblocks.hpp"
#include "cil/stream.hpp"

namespace cil {

using Json = nlohmann::ordered_json;

struct DatasetConfig {
    std::optional<SynthSpec> synthetic;  // set when the data is generated
    std::string train_path;              // otherwise two files
    std::string test_path;
};

struct BudgetConfig {
    std::size_t base_exemplars = 40;
    std::size_t bytes_per_param = 4;
    std::optional<std::size_t> bytes_per_exemplar;  // default: feature dim x 1 byte
    std::optional<double> target_mb;                 // exactly one of target_mb and align_to
    std::optional<Method> align_to;
};

struct ProbeConfig {
    bool enabled = false;
    std::size_t cka_samples = 200;
};

struct ExperimentConfig {
    Method method = Method::replay;
    std::uint64_t seed = 1993;
    DatasetConfig dataset;
    std::size_t split_base = 0;
    std::size_t split_increment = 2;
    std::uint64_t class_order_seed = 1993;
    std::size_t hidden_dim = 8;
    std::size_t num_blocks = 3;
    std::size_t decomposition_index = 0;
    BudgetConfig budget;
    LearnerConfig learner;  // learner.method and learner.seed mirror the fields above
    ProbeConfig probes;

    void validate() const;
};

/// Parses the JSON config; unknown keys are rejected. Relative dataset paths
/// are resolved against `base_dir`.
ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
Json to_json(const ExperimentConfig& c);

/// 64-bit FNV-1a of the canonical config dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

/// Parameter count of `method`'s model after `stages` tasks covering
/// `classes` classes, classifier included, auxiliary head excluded.
std::size_t final_param_count(Method method, const BackboneSpec& spec, std::size_t stages, std::size_t classes);

struct BudgetPlan {
    std::size_t target_bytes = 0;
    std::size_t bytes_per_exemplar = 0;
    BudgetLedger ledger;  // final model plus the exemplar budget K
};

BudgetPlan plan_budget(const ExperimentConfig& c, const BackboneSpec& spec, std::size_t stages, std::size_t classes);

struct StageRecord {
    StageResult result;
    std::size_t total_bytes = 0;
};

struct CkaRecord {
    std::vector<std::vector<double>> shallow;
    std::vector<std::vector<double>> deep;
};

struct RunRecord {
    ExperimentConfig config;
    std::string hash;
    std::string software_version;
    std::vector<std::size_t> class_order;
    BudgetPlan budget;
    std::vector<StageRecord> stages;
    double average_accuracy = 0.0;  // 2 decimals
    double last_accuracy = 0.0;
    double memory_mb = 0.0;  // ledger total, unrounded
    std::optional<CkaRecord> cka;
};

Dataset load_experiment_data(const ExperimentConfig& c);
RunRecord run_experiment(const ExperimentConfig& c);
RunRecord run_experiment(const ExperimentConfig& c, const Dataset& data);

Json to_json(const RunRecord& r);
RunRecord record_from_json(const Json& j);
/// Serialized record with every wall-time field removed.
std::string timing_free_dump(const RunRecord& r);

/// memory_MB,avg_acc,last_acc rows sorted by memory. Records must share
/// method and split; duplicate memory points are rejected.
std::string emit_curve(std::vector<RunRecord> records);

/// One row per method over its memory sweep:
/// method,memory_MB,avg,last,AUC-A,AUC-L,APM-S,APM-E. memory_MB, avg and last
/// describe the largest budget; AUC columns are empty for single-point sweeps.
std::string metrics_table(const std::vector<RunRecord>& records);

enum class ProbeFigure { gradnorm, shift, cka };
ProbeFigure probe_figure_from_string(const std::string& s);
std::string probe_csv(const RunRecord& r, ProbeFigure figure);

}  // namespace cil
