#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cil/dataset.hpp"
#include "cil/exemplars.hpp"
#include "cil/netblocks.hpp"
#include "cil/optim.hpp"

namespace cil {

enum class Method { replay, icarl, wa, der, memo };

std::string to_string(Method m);
Method method_from_string(const std::string& s);
Strategy strategy_for(Method m);

struct LambdaPolicy {
    enum class Kind { fixed, class_ratio } kind = Kind::class_ratio;
    double value = 0.0;  // used when kind == fixed

    static LambdaPolicy fixed(double v) { return {Kind::fixed, v}; }
    static LambdaPolicy class_ratio() { return {Kind::class_ratio, 0.0}; }
    bool operator==(const LambdaPolicy&) const = default;
};

struct LearnerConfig {
    Method method = Method::replay;
    int epochs = 30;
    std::size_t batch_size = 32;
    SgdConfig sgd{0.1, 0.9, {{15, 0.1}, {25, 0.1}}};
    LambdaPolicy lambda = LambdaPolicy::class_ratio();
    FreezePolicy freeze_policy = FreezePolicy::automatic;
    std::size_t freeze_threshold = 20;
    double aux_weight = 1.0;
    bool memo_weight_norm = true;
    ClassifierInit classifier_init = ClassifierInit::random;
    bool reherd_each_stage = true;
    bool record_probes = false;
    std::uint64_t seed = 1993;

    void validate() const;
};

/// Per-stage network-behavior measurements over the active backbone path.
struct StageProbes {
    std::vector<double> grad_norm;  // per block, mean over the stage's optimizer steps
    std::vector<double> shift_mse;  // per block, first-epoch end vs last-epoch end
    bool operator==(const StageProbes&) const = default;
};

struct StageResult {
    std::size_t stage = 0;                 // 0-based
    double accuracy = 0.0;                 // percent over all seen classes
    std::vector<double> task_accuracies;   // percent, one per task seen so far
    double final_loss = 0.0;               // mean loss of the last epoch
    double wall_time_s = 0.0;
    std::size_t exemplars_stored = 0;
    std::size_t model_params = 0;
    std::optional<StageProbes> probes;
};

/// Training data of one stage behind an access check: only instances of the
/// current task and stored exemplars can be read, and every read is logged.
class StageData {
 public:
    StageData(const DataSplit& train, std::span<const std::size_t> position_of, std::vector<std::size_t> task_ids,
              std::vector<std::size_t> exemplar_ids);

    // Task instances first, then exemplars, in the order given.
    const std::vector<std::size_t>& ids() const noexcept { return ids_; }
    std::size_t task_size() const noexcept { return task_count_; }

    Tensor features(std::span<const std::size_t> ids) const;
    std::vector<std::size_t> labels(std::span<const std::size_t> ids) const;  // class positions

    const std::set<std::size_t>& accessed() const noexcept { return accessed_; }
    const std::set<std::size_t>& allowed() const noexcept { return allowed_; }

 private:
    void check(std::size_t id) const;

    const DataSplit* train_;
    std::span<const std::size_t> position_of_;
    std::vector<std::size_t> ids_;
    std::size_t task_count_ = 0;
    std::set<std::size_t> allowed_;
    mutable std::set<std::size_t> accessed_;
};

// Loss terms, recorded on the graph.

/// (1 - lambda) * CE + lambda * KD. old_logits may be empty only if lambda == 0.
Var loss_icarl(Graph& g, Var logits, const Tensor& old_logits, std::span<const std::size_t> labels, double lambda);

/// CE over the full classifier plus aux_weight * CE of the auxiliary head.
Var loss_expand(Graph& g, Var logits, std::span<const std::size_t> labels, std::optional<Var> aux_logits,
                std::span<const std::size_t> aux_labels, double aux_weight);

double lambda_value(const LambdaPolicy& policy, std::size_t old_classes, std::size_t total_classes);

/// Scales the new-class columns of W by mean(||w_old||) / mean(||w_new||).
void weight_align(Tensor& w, std::span<const std::size_t> old_columns, std::span<const std::size_t> new_columns);
double mean_column_norm(const Tensor& w, std::span<const std::size_t> columns);

/// Labels of the current task map to their index within new_classes; any
/// other seen label maps to new_classes.size().
std::vector<std::size_t> aux_remap_labels(std::span<const std::size_t> labels, std::span<const std::size_t> new_classes,
                                          std::size_t seen_class_count);

/// Accuracy (percent) of argmax over the classifier on the given rows.
double accuracy(ExpandableModel& model, const Tensor& x, std::span<const std::size_t> labels);

/// One incremental learner: owns the model, the exemplar memory and, for the
/// distillation methods, the frozen previous-stage model.
///
/// Randomness: a master splitmix64 seeded with config.seed yields one sub-seed
/// per stage. Each stage seeds a generator from it and draws, in order, the
/// model seed (create/grow/expand) and the shuffle seed. Mini-batches are one
/// Fisher-Yates permutation of StageData::ids() per epoch, last short batch
/// kept.
class Learner {
 public:
    Learner(LearnerConfig config, BackboneSpec spec, std::size_t exemplar_budget);

    struct StageTask {
        std::vector<std::size_t> classes;    // class positions of the new task
        std::vector<std::size_t> train_ids;  // rows of the training split
    };

    StageResult train_stage(const DataSplit& train, std::span<const std::size_t> position_of, const StageTask& task);

    // Accuracy over all seen classes plus per-task accuracies.
    void evaluate(const DataSplit& test, std::span<const std::size_t> position_of,
                  const std::vector<std::vector<std::size_t>>& test_ids_per_task, StageResult& result);

    const LearnerConfig& config() const noexcept { return config_; }
    const std::optional<ExpandableModel>& model() const noexcept { return model_; }
    std::optional<ExpandableModel>& model() noexcept { return model_; }
    const ExemplarSet& exemplars() const noexcept { return exemplars_; }
    std::size_t seen_classes() const noexcept { return seen_; }
    std::size_t stage() const noexcept { return stage_; }
    const std::set<std::size_t>& last_access_log() const noexcept { return last_accessed_; }
    const std::set<std::size_t>& last_allowed() const noexcept { return last_allowed_; }

 private:
    void update_exemplars(const DataSplit& train, std::span<const std::size_t> position_of, const StageTask& task,
                          const StageData& data);

    LearnerConfig config_;
    BackboneSpec spec_;
    Prng master_;
    std::optional<ExpandableModel> model_;
    ExemplarSet exemplars_;
    std::size_t seen_ = 0;
    std::size_t stage_ = 0;
    std::size_t base_classes_ = 0;
    std::set<std::size_t> last_accessed_;
    std::set<std::size_t> last_allowed_;
};

}  // namespace cil
