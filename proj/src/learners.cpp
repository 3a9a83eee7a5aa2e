#include "cil/learners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "cil/errors.hpp"
#include "cil/probes.hpp"

namespace cil {

std::string to_string(Method m) {
    switch (m) {
        case Method::replay: return "replay";
        case Method::icarl: return "icarl";
        case Method::wa: return "wa";
        case Method::der: return "der";
        case Method::memo: return "memo";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "replay") return Method::replay;
    if (s == "icarl") return Method::icarl;
    if (s == "wa") return Method::wa;
    if (s == "der") return Method::der;
    if (s == "memo") return Method::memo;
    throw ContractError("unknown method '" + s + "' (expected replay, icarl, wa, der or memo)");
}

Strategy strategy_for(Method m) {
    switch (m) {
        case Method::der: return Strategy::full_expand;
        case Method::memo: return Strategy::decoupled_expand;
        default: return Strategy::single;
    }
}

void LearnerConfig::validate() const {
    if (epochs < 1) throw ContractError("learner: epochs must be at least 1");
    if (batch_size < 1) throw ContractError("learner: batch size must be at least 1");
    if (lambda.kind == LambdaPolicy::Kind::fixed && (lambda.value < 0.0 || lambda.value > 1.0))
        throw ContractError("learner: fixed lambda must lie in [0, 1]");
    if (aux_weight < 0.0) throw ContractError("learner: aux_weight must be non-negative");
    if (!(sgd.learning_rate > 0.0)) throw ContractError("learner: learning rate must be positive");
    if (sgd.momentum < 0.0 || sgd.momentum >= 1.0) throw ContractError("learner: momentum must lie in [0, 1)");
}

// ---------------------------------------------------------------------------

StageData::StageData(const DataSplit& train, std::span<const std::size_t> position_of,
                     std::vector<std::size_t> task_ids, std::vector<std::size_t> exemplar_ids)
    : train_(&train), position_of_(position_of), task_count_(task_ids.size()) {
    ids_ = std::move(task_ids);
    ids_.insert(ids_.end(), exemplar_ids.begin(), exemplar_ids.end());
    for (auto id : ids_) {
        if (id >= train.size()) throw ContractError("stage data: instance id out of range");
        allowed_.insert(id);
    }
}

void StageData::check(std::size_t id) const {
    if (!allowed_.contains(id))
        throw ContractError("stage data: instance " + std::to_string(id) +
                            " is neither in the current task nor in the exemplar memory");
    accessed_.insert(id);
}

Tensor StageData::features(std::span<const std::size_t> ids) const {
    for (auto id : ids) check(id);
    return take_rows(train_->features, ids);
}

std::vector<std::size_t> StageData::labels(std::span<const std::size_t> ids) const {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (auto id : ids) {
        check(id);
        out.push_back(position_of_[train_->labels[id]]);
    }
    return out;
}

// ---------------------------------------------------------------------------

Var loss_icarl(Graph& g, Var logits, const Tensor& old_logits, std::span<const std::size_t> labels, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw ContractError("loss_icarl: lambda must lie in [0, 1]");
    Var ce = g.softmax_cross_entropy(logits, labels);
    if (old_logits.empty()) {
        if (lambda > 0.0) throw ContractError("loss_icarl: lambda > 0 but there is no previous model to distill from");
        return g.scale(ce, 1.0 - lambda);
    }
    Var kd = g.kd_term(logits, old_logits);
    return g.add(g.scale(ce, 1.0 - lambda), g.scale(kd, lambda));
}

Var loss_expand(Graph& g, Var logits, std::span<const std::size_t> labels, std::optional<Var> aux_logits,
                std::span<const std::size_t> aux_labels, double aux_weight) {
    Var main = g.softmax_cross_entropy(logits, labels);
    if (!aux_logits || aux_weight == 0.0) return main;
    Var aux = g.softmax_cross_entropy(*aux_logits, aux_labels);
    return g.add(main, g.scale(aux, aux_weight));
}

double lambda_value(const LambdaPolicy& policy, std::size_t old_classes, std::size_t total_classes) {
    if (old_classes >= total_classes) throw ContractError("lambda_value: need more classes than before");
    if (policy.kind == LambdaPolicy::Kind::fixed) return policy.value;
    return static_cast<double>(old_classes) / static_cast<double>(total_classes);
}

double mean_column_norm(const Tensor& w, std::span<const std::size_t> columns) {
    if (columns.empty()) throw ContractError("mean_column_norm: no columns");
    double total = 0.0;
    for (auto c : columns) {
        if (c >= w.cols()) throw ContractError("mean_column_norm: column out of range");
        double sq = 0.0;
        for (std::size_t r = 0; r < w.rows(); ++r) sq += w(r, c) * w(r, c);
        total += std::sqrt(sq);
    }
    return total / static_cast<double>(columns.size());
}

void weight_align(Tensor& w, std::span<const std::size_t> old_columns, std::span<const std::size_t> new_columns) {
    if (old_columns.empty() || new_columns.empty()) throw ContractError("weight_align: both column sets must be non-empty");
    const double old_norm = mean_column_norm(w, old_columns);
    const double new_norm = mean_column_norm(w, new_columns);
    if (new_norm == 0.0) throw ContractError("weight_align: new-class columns have zero norm");
    const double gamma = old_norm / new_norm;
    for (auto c : new_columns)
        for (std::size_t r = 0; r < w.rows(); ++r) w(r, c) *= gamma;
}

std::vector<std::size_t> aux_remap_labels(std::span<const std::size_t> labels, std::span<const std::size_t> new_classes,
                                          std::size_t seen_class_count) {
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (auto y : labels) {
        if (y >= seen_class_count) throw ContractError("aux_remap_labels: label " + std::to_string(y) + " is not a seen class");
        auto it = std::find(new_classes.begin(), new_classes.end(), y);
        out.push_back(it == new_classes.end() ? new_classes.size()
                                              : static_cast<std::size_t>(it - new_classes.begin()));
    }
    return out;
}

double accuracy(ExpandableModel& model, const Tensor& x, std::span<const std::size_t> labels) {
    if (labels.empty()) throw ContractError("accuracy: no samples");
    const auto pred = argmax_rows(model.logits(x));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += pred[i] == labels[i] ? 1 : 0;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------

Learner::Learner(LearnerConfig config, BackboneSpec spec, std::size_t exemplar_budget)
    : config_(std::move(config)), spec_(spec), master_(config_.seed), exemplars_(exemplar_budget) {
    config_.validate();
    spec_.validate();
}

StageResult Learner::train_stage(const DataSplit& train, std::span<const std::size_t> position_of,
                                 const StageTask& task) {
    const auto t0 = std::chrono::steady_clock::now();
    if (task.train_ids.empty()) throw ContractError("train_stage: the new task has no training data");
    if (task.classes.empty()) throw ContractError("train_stage: the new task has no classes");
    for (auto c : task.classes) {
        if (c < seen_ || exemplars_.has_class(c))
            throw ContractError("train_stage: class " + std::to_string(c) + " was already learned in an earlier task");
    }
    for (auto id : task.train_ids) {
        if (id >= train.size()) throw ContractError("train_stage: training id out of range");
        const auto pos = position_of[train.labels[id]];
        if (std::find(task.classes.begin(), task.classes.end(), pos) == task.classes.end())
            throw ContractError("train_stage: instance " + std::to_string(id) + " does not belong to the new task");
    }
    for (auto c : task.classes)
        if (c >= seen_ + task.classes.size())
            throw ContractError("train_stage: class positions of a task must follow the seen classes");

    Prng stage_rng(master_.next());
    const std::uint64_t model_seed = stage_rng.next();
    Prng shuffle_rng(stage_rng.next());

    const Method method = config_.method;
    const Strategy strategy = strategy_for(method);
    const std::size_t n_new = task.classes.size();
    std::optional<ExpandableModel> old_model;

    if (!model_) {
        base_classes_ = n_new;
        model_ = ExpandableModel::create(strategy, spec_, n_new, model_seed, config_.classifier_init);
    } else if (strategy == Strategy::single) {
        if (method == Method::icarl || method == Method::wa) old_model = *model_;
        model_->grow_classes(n_new, model_seed);
    } else {
        model_->expand_for_task(n_new, model_seed);
        if (strategy == Strategy::decoupled_expand)
            model_->set_generalized_freeze(config_.freeze_policy, base_classes_, config_.freeze_threshold);
    }
    const std::size_t old_classes = seen_;
    seen_ += n_new;
    const bool incremental = stage_ > 0;

    StageData data(train, position_of, task.train_ids, exemplars_.instance_ids());
    const double lambda =
        (old_model && incremental) ? lambda_value(config_.lambda, old_classes, seen_) : 0.0;

    Sgd sgd(config_.sgd, model_->parameters());
    auto blocks = model_->active_blocks();
    std::vector<double> grad_norm_sum(blocks.size(), 0.0);
    std::size_t steps = 0;
    BlockSnapshot first_snapshot;

    StageResult result;
    result.stage = stage_;
    const std::size_t n = data.ids().size();
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
        const auto order = shuffled_indices(n, shuffle_rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += config_.batch_size) {
            const std::size_t end = std::min(n, start + config_.batch_size);
            std::vector<std::size_t> ids;
            ids.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) ids.push_back(data.ids()[order[i]]);
            const Tensor x = data.features(ids);
            const auto y = data.labels(ids);

            Graph g;
            const auto fwd = model_->forward(g, x);
            Var loss{};
            if (old_model) {
                loss = loss_icarl(g, fwd.logits, old_model->logits(x), y, lambda);
            } else if (incremental && strategy != Strategy::single) {
                const auto aux_y = aux_remap_labels(y, task.classes, seen_);
                loss = loss_expand(g, fwd.logits, y, model_->aux_logits(g, fwd.newest_branch), aux_y,
                                   config_.aux_weight);
            } else {
                loss = g.softmax_cross_entropy(fwd.logits, y);
            }
            sgd.zero_grad();
            g.backward(loss);
            if (config_.record_probes) {
                const auto norms = block_grad_norms(blocks);
                for (std::size_t b = 0; b < norms.size(); ++b) grad_norm_sum[b] += norms[b];
                ++steps;
            }
            sgd.step(epoch);
            loss_sum += g.value(loss)[0];
            ++batches;
        }
        result.final_loss = loss_sum / static_cast<double>(batches);
        if (config_.record_probes && epoch == 0) first_snapshot = snapshot_blocks(blocks);
    }

    if (config_.record_probes) {
        StageProbes probes;
        probes.grad_norm = grad_norm_sum;
        for (auto& v : probes.grad_norm) v /= static_cast<double>(steps);
        probes.shift_mse = block_shift_mse(first_snapshot, snapshot_blocks(blocks));
        result.probes = std::move(probes);
    }

    model_->drop_aux_classifier();
    const bool align = incremental && (method == Method::wa || (method == Method::memo && config_.memo_weight_norm));
    if (align) {
        std::vector<std::size_t> old_cols(old_classes), new_cols;
        for (std::size_t c = 0; c < old_classes; ++c) old_cols[c] = c;
        for (std::size_t c = old_classes; c < seen_; ++c) new_cols.push_back(c);
        weight_align(model_->classifier().value, old_cols, new_cols);
    }

    update_exemplars(train, position_of, task, data);
    last_accessed_ = data.accessed();
    last_allowed_ = data.allowed();
    ++stage_;

    result.exemplars_stored = exemplars_.size();
    result.model_params = model_->param_count();
    result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

void Learner::update_exemplars(const DataSplit& train, std::span<const std::size_t> position_of,
                               const StageTask& task, const StageData& data) {
    if (exemplars_.budget() == 0) return;
    const std::size_t m = exemplar_quota(exemplars_.budget(), seen_);
    ExemplarSet next(exemplars_.budget());
    auto select = [&](const std::vector<std::size_t>& ids) {
        const std::size_t k = std::min(m, ids.size());
        if (k == 0) return std::vector<std::size_t>{};
        const Tensor feats = model_->features(data.features(ids));
        const auto picked = herding_select(feats, k);
        std::vector<std::size_t> out;
        out.reserve(k);
        for (auto i : picked) out.push_back(ids[i]);
        return out;
    };
    for (const auto& [label, ids] : exemplars_.classes()) {
        if (config_.reherd_each_stage) {
            next.set_class(label, select(ids));
        } else {
            std::vector<std::size_t> kept(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(std::min(m, ids.size())));
            next.set_class(label, std::move(kept));
        }
    }
    for (auto c : task.classes) {
        std::vector<std::size_t> ids;
        for (auto id : task.train_ids)
            if (position_of[train.labels[id]] == c) ids.push_back(id);
        next.set_class(c, select(ids));
    }
    if (next.size() > next.budget()) throw ContractError("exemplars: memory exceeds its budget");
    exemplars_ = std::move(next);
}

void Learner::evaluate(const DataSplit& test, std::span<const std::size_t> position_of,
                       const std::vector<std::vector<std::size_t>>& test_ids_per_task, StageResult& result) {
    if (!model_) throw ContractError("evaluate: no model trained yet");
    std::vector<std::size_t> all;
    result.task_accuracies.clear();
    for (const auto& ids : test_ids_per_task) {
        if (ids.empty()) throw ContractError("evaluate: task without test data");
        std::vector<std::size_t> labels;
        for (auto id : ids) {
            const auto pos = position_of[test.labels[id]];
            if (pos >= seen_) throw ContractError("evaluate: test instance of an unseen class");
            labels.push_back(pos);
        }
        result.task_accuracies.push_back(accuracy(*model_, take_rows(test.features, ids), labels));
        all.insert(all.end(), ids.begin(), ids.end());
    }
    std::vector<std::size_t> labels;
    for (auto id : all) labels.push_back(position_of[test.labels[id]]);
    result.accuracy = accuracy(*model_, take_rows(test.features, all), labels);
}

}  // namespace cil
