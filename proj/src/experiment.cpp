#include "cil/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cil/errors.hpp"
#include "cil/metrics.hpp"
#include "cil/probes.hpp"

#ifndef CIL_VERSION
#define CIL_VERSION "0.0.0"
#endif

namespace cil {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ContractError("config: '" + where + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end())
            throw ContractError("config: unknown key '" + key + "' in '" + where + "'");
    }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

LearnerConfig full_profile() {
    LearnerConfig l;
    l.epochs = 170;
    l.batch_size = 128;
    l.sgd = SgdConfig{0.1, 0.9, {{80, 0.1}, {150, 0.1}}};
    return l;
}

LearnerConfig parse_learner(const Json& j) {
    check_keys(j,
               {"profile", "epochs", "batch_size", "learning_rate", "momentum", "lr_schedule", "lambda",
                "freeze_policy", "freeze_threshold", "aux_weight", "memo_weight_norm", "classifier_init",
                "reherd_each_stage"},
               "learner");
    const auto profile = get_or<std::string>(j, "profile", "desk");
    LearnerConfig l;
    if (profile == "full")
        l = full_profile();
    else if (profile != "desk")
        throw ContractError("config: learner.profile must be 'desk' or 'full'");
    l.epochs = get_or(j, "epochs", l.epochs);
    l.batch_size = get_or(j, "batch_size", l.batch_size);
    l.sgd.learning_rate = get_or(j, "learning_rate", l.sgd.learning_rate);
    l.sgd.momentum = get_or(j, "momentum", l.sgd.momentum);
    if (j.contains("lr_schedule")) {
        l.sgd.schedule.clear();
        for (const auto& m : j.at("lr_schedule")) {
            check_keys(m, {"epoch", "factor"}, "learner.lr_schedule");
            l.sgd.schedule.push_back({m.at("epoch").get<int>(), m.at("factor").get<double>()});
        }
    }
    if (j.contains("lambda")) {
        const auto& v = j.at("lambda");
        if (v.is_string()) {
            if (v.get<std::string>() != "class_ratio")
                throw ContractError("config: learner.lambda must be 'class_ratio' or a number");
            l.lambda = LambdaPolicy::class_ratio();
        } else {
            l.lambda = LambdaPolicy::fixed(v.get<double>());
        }
    }
    if (j.contains("freeze_policy")) l.freeze_policy = freeze_policy_from_string(j.at("freeze_policy").get<std::string>());
    l.freeze_threshold = get_or(j, "freeze_threshold", l.freeze_threshold);
    l.aux_weight = get_or(j, "aux_weight", l.aux_weight);
    l.memo_weight_norm = get_or(j, "memo_weight_norm", l.memo_weight_norm);
    if (j.contains("classifier_init"))
        l.classifier_init = classifier_init_from_string(j.at("classifier_init").get<std::string>());
    l.reherd_each_stage = get_or(j, "reherd_each_stage", l.reherd_each_stage);
    return l;
}

Json learner_json(const LearnerConfig& l) {
    Json j;
    j["epochs"] = l.epochs;
    j["batch_size"] = l.batch_size;
    j["learning_rate"] = l.sgd.learning_rate;
    j["momentum"] = l.sgd.momentum;
    Json sched = Json::array();
    for (const auto& m : l.sgd.schedule) sched.push_back({{"epoch", m.epoch}, {"factor", m.factor}});
    j["lr_schedule"] = sched;
    if (l.lambda.kind == LambdaPolicy::Kind::class_ratio)
        j["lambda"] = "class_ratio";
    else
        j["lambda"] = l.lambda.value;
    j["freeze_policy"] = to_string(l.freeze_policy);
    j["freeze_threshold"] = l.freeze_threshold;
    j["aux_weight"] = l.aux_weight;
    j["memo_weight_norm"] = l.memo_weight_norm;
    j["classifier_init"] = to_string(l.classifier_init);
    j["reherd_each_stage"] = l.reherd_each_stage;
    return j;
}

std::string resolve(const std::string& p, const std::filesystem::path& base) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) path = base / path;
    return path.lexically_normal().string();
}

BackboneSpec backbone_of(const ExperimentConfig& c, std::size_t input_dim) {
    BackboneSpec spec{input_dim, c.hidden_dim, c.num_blocks, c.decomposition_index};
    spec.validate();
    return spec;
}

// Evenly spaced test rows so every class is represented.
std::vector<std::size_t> probe_rows(std::size_t n, std::size_t k) {
    k = std::min(k, n);
    std::vector<std::size_t> rows(k);
    for (std::size_t i = 0; i < k; ++i) rows[i] = i * n / k;
    return rows;
}

template <class E>
[[noreturn]] void rethrow_with_stage(const E& e, std::size_t stage) {
    throw E("stage " + std::to_string(stage + 1) + ": " + e.what());
}

Json matrix_json(const std::vector<std::vector<double>>& m) {
    Json j = Json::array();
    for (const auto& row : m) j.push_back(row);
    return j;
}

}  // namespace

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    if (dataset.synthetic.has_value() == (!dataset.train_path.empty() || !dataset.test_path.empty()))
        throw ContractError("config: dataset needs either 'synthetic' or both 'train' and 'test'");
    if (!dataset.synthetic && (dataset.train_path.empty() || dataset.test_path.empty()))
        throw ContractError("config: dataset needs both 'train' and 'test' paths");
    if (budget.target_mb.has_value() == budget.align_to.has_value())
        throw ContractError("config: budget needs exactly one of 'target_mb' and 'align_to'");
    if (budget.target_mb && !(*budget.target_mb > 0.0)) throw ContractError("config: budget.target_mb must be positive");
    if (budget.bytes_per_param == 0) throw ContractError("config: budget.bytes_per_param must be positive");
    if (budget.bytes_per_exemplar && *budget.bytes_per_exemplar == 0)
        throw ContractError("config: budget.bytes_per_exemplar must be positive");
    if (probes.cka_samples < 2) throw ContractError("config: probes.cka_samples must be at least 2");
    if (split_increment == 0) throw ContractError("config: split.increment must be at least 1");
    learner.validate();
}

ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir) {
    try {
        check_keys(j, {"method", "seed", "dataset", "split", "backbone", "budget", "learner", "probes"}, "config");
        ExperimentConfig c;
        if (!j.contains("method")) throw ContractError("config: 'method' is required");
        c.method = method_from_string(j.at("method").get<std::string>());
        c.seed = get_or<std::uint64_t>(j, "seed", c.seed);

        const Json ds = get_or<Json>(j, "dataset", Json::object());
        check_keys(ds, {"synthetic", "train", "test"}, "dataset");
        if (ds.contains("train") || ds.contains("test")) {
            c.dataset.train_path = resolve(get_or<std::string>(ds, "train", ""), base_dir);
            c.dataset.test_path = resolve(get_or<std::string>(ds, "test", ""), base_dir);
        }
        if (ds.contains("synthetic") || (!ds.contains("train") && !ds.contains("test"))) {
            const Json s = get_or<Json>(ds, "synthetic", Json::object());
            check_keys(s, {"classes", "train_per_class", "test_per_class", "dim", "spread", "seed"}, "dataset.synthetic");
            SynthSpec spec;
            spec.num_classes = get_or(s, "classes", spec.num_classes);
            spec.train_per_class = get_or(s, "train_per_class", spec.train_per_class);
            spec.test_per_class = get_or(s, "test_per_class", spec.test_per_class);
            spec.dim = get_or(s, "dim", spec.dim);
            spec.spread = get_or(s, "spread", spec.spread);
            spec.seed = get_or<std::uint64_t>(s, "seed", c.seed);
            c.dataset.synthetic = spec;
        }

        const Json sp = get_or<Json>(j, "split", Json::object());
        check_keys(sp, {"base", "increment", "class_order_seed"}, "split");
        c.split_base = get_or(sp, "base", c.split_base);
        c.split_increment = get_or(sp, "increment", c.split_increment);
        c.class_order_seed = get_or<std::uint64_t>(sp, "class_order_seed", c.class_order_seed);

        const Json bb = get_or<Json>(j, "backbone", Json::object());
        check_keys(bb, {"hidden_dim", "num_blocks", "decomposition_index"}, "backbone");
        c.hidden_dim = get_or(bb, "hidden_dim", c.hidden_dim);
        c.num_blocks = get_or(bb, "num_blocks", c.num_blocks);
        c.decomposition_index = get_or(bb, "decomposition_index", c.decomposition_index);

        if (!j.contains("budget")) throw ContractError("config: 'budget' is required");
        const Json& bu = j.at("budget");
        check_keys(bu, {"base_exemplars", "bytes_per_param", "bytes_per_exemplar", "target_mb", "align_to"}, "budget");
        c.budget.base_exemplars = get_or(bu, "base_exemplars", c.budget.base_exemplars);
        c.budget.bytes_per_param = get_or(bu, "bytes_per_param", c.budget.bytes_per_param);
        if (bu.contains("bytes_per_exemplar")) c.budget.bytes_per_exemplar = bu.at("bytes_per_exemplar").get<std::size_t>();
        if (bu.contains("target_mb")) c.budget.target_mb = bu.at("target_mb").get<double>();
        if (bu.contains("align_to")) c.budget.align_to = method_from_string(bu.at("align_to").get<std::string>());

        c.learner = parse_learner(get_or<Json>(j, "learner", Json::object()));
        c.learner.method = c.method;
        c.learner.seed = c.seed;

        const Json pr = get_or<Json>(j, "probes", Json::object());
        check_keys(pr, {"enabled", "cka_samples"}, "probes");
        c.probes.enabled = get_or(pr, "enabled", c.probes.enabled);
        c.probes.cka_samples = get_or(pr, "cka_samples", c.probes.cka_samples);
        c.learner.record_probes = c.probes.enabled;

        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ContractError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open config '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("config '" + path.string() + "': " + e.what(), e.byte);
    }
    return parse_config(j, path.parent_path());
}

Json to_json(const ExperimentConfig& c) {
    Json j;
    j["method"] = to_string(c.method);
    j["seed"] = c.seed;
    Json ds;
    if (c.dataset.synthetic) {
        const auto& s = *c.dataset.synthetic;
        ds["synthetic"] = {{"classes", s.num_classes},     {"train_per_class", s.train_per_class},
                           {"test_per_class", s.test_per_class}, {"dim", s.dim},
                           {"spread", s.spread},            {"seed", s.seed}};
    } else {
        ds["train"] = c.dataset.train_path;
        ds["test"] = c.dataset.test_path;
    }
    j["dataset"] = ds;
    j["split"] = {{"base", c.split_base}, {"increment", c.split_increment}, {"class_order_seed", c.class_order_seed}};
    j["backbone"] = {{"hidden_dim", c.hidden_dim},
                     {"num_blocks", c.num_blocks},
                     {"decomposition_index", c.decomposition_index}};
    Json bu;
    bu["base_exemplars"] = c.budget.base_exemplars;
    bu["bytes_per_param"] = c.budget.bytes_per_param;
    if (c.budget.bytes_per_exemplar) bu["bytes_per_exemplar"] = *c.budget.bytes_per_exemplar;
    if (c.budget.target_mb) bu["target_mb"] = *c.budget.target_mb;
    if (c.budget.align_to) bu["align_to"] = to_string(*c.budget.align_to);
    j["budget"] = bu;
    j["learner"] = learner_json(c.learner);
    j["probes"] = {{"enabled", c.probes.enabled}, {"cka_samples", c.probes.cka_samples}};
    return j;
}

std::string config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json(c).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------

std::size_t final_param_count(Method method, const BackboneSpec& spec, std::size_t stages, std::size_t classes) {
    spec.validate();
    if (stages == 0) throw ContractError("final_param_count: need at least one stage");
    const std::size_t d = spec.hidden_dim;
    switch (strategy_for(method)) {
        case Strategy::single: return spec.backbone_params() + d * classes;
        case Strategy::full_expand: return stages * spec.backbone_params() + stages * d * classes;
        case Strategy::decoupled_expand:
            return spec.trunk_params() + stages * spec.suffix_params() + stages * d * classes;
    }
    return 0;
}

BudgetPlan plan_budget(const ExperimentConfig& c, const BackboneSpec& spec, std::size_t stages, std::size_t classes) {
    BudgetPlan plan;
    plan.bytes_per_exemplar = c.budget.bytes_per_exemplar.value_or(spec.input_dim);
    const std::uint64_t bpp = c.budget.bytes_per_param;
    const std::uint64_t own_params = final_param_count(c.method, spec, stages, classes);
    if (c.budget.target_mb) {
        plan.target_bytes = megabytes_to_bytes(*c.budget.target_mb);
    } else {
        const std::uint64_t ref_params = final_param_count(*c.budget.align_to, spec, stages, classes);
        plan.target_bytes = ref_params * bpp + c.budget.base_exemplars * plan.bytes_per_exemplar;
    }
    plan.ledger.model_param_count = own_params;
    plan.ledger.bytes_per_param = bpp;
    plan.ledger.bytes_per_exemplar = plan.bytes_per_exemplar;
    plan.ledger.exemplar_count =
        align_budget(plan.target_bytes, own_params * bpp, plan.bytes_per_exemplar, c.budget.base_exemplars);
    plan.ledger.validate();
    return plan;
}

// ---------------------------------------------------------------------------

Dataset load_experiment_data(const ExperimentConfig& c) {
    if (c.dataset.synthetic) return synth_dataset(*c.dataset.synthetic);
    return load_dataset(c.dataset.train_path, c.dataset.test_path);
}

RunRecord run_experiment(const ExperimentConfig& c) { return run_experiment(c, load_experiment_data(c)); }

RunRecord run_experiment(const ExperimentConfig& config, const Dataset& data) {
    config.validate();
    data.validate();
    ExperimentConfig c = config;
    c.learner.method = c.method;
    c.learner.seed = c.seed;
    c.learner.record_probes = c.probes.enabled;

    const SplitSpec split{c.split_base, c.split_increment, data.num_classes};
    const TaskStream stream = make_stream(data, split, c.class_order_seed);
    const BackboneSpec spec = backbone_of(c, data.train.features.cols());

    RunRecord rec;
    rec.config = c;
    rec.hash = config_hash(c);
    rec.software_version = CIL_VERSION;
    rec.class_order = stream.class_order;
    rec.budget = plan_budget(c, spec, stream.stages(), data.num_classes);
    const auto& ledger = rec.budget.ledger;

    Learner learner(c.learner, spec, ledger.exemplar_count);
    std::vector<double> accs;
    for (std::size_t b = 0; b < stream.stages(); ++b) {
        StageRecord sr;
        try {
            sr.result = learner.train_stage(data.train, stream.position_of, {stream.stage_classes[b], stream.train_ids[b]});
            std::vector<std::vector<std::size_t>> tests(stream.test_ids.begin(),
                                                        stream.test_ids.begin() + static_cast<std::ptrdiff_t>(b + 1));
            learner.evaluate(data.test, stream.position_of, tests, sr.result);
            sr.total_bytes = sr.result.model_params * ledger.bytes_per_param +
                             sr.result.exemplars_stored * ledger.bytes_per_exemplar;
            if (sr.total_bytes > rec.budget.target_bytes)
                throw ContractError("memory " + std::to_string(sr.total_bytes) + " B exceeds the budget of " +
                                    std::to_string(rec.budget.target_bytes) + " B");
        } catch (const NumericError& e) {
            rethrow_with_stage(e, b);
        } catch (const ContractError& e) {
            rethrow_with_stage(e, b);
        }
        accs.push_back(sr.result.accuracy);
        rec.stages.push_back(std::move(sr));
    }
    if (learner.model()->param_count() != ledger.model_param_count)
        throw std::logic_error("final model size disagrees with the budget plan");

    rec.average_accuracy = average_accuracy(accs);
    rec.last_accuracy = accs.back();
    rec.memory_mb = bytes_to_megabytes(ledger.total_bytes());

    auto& model = *learner.model();
    if (c.probes.enabled && model.num_tasks() >= 2) {
        const Tensor batch = take_rows(data.test.features, probe_rows(data.test.size(), c.probes.cka_samples));
        rec.cka = CkaRecord{cka_matrix(model, BlockDepth::shallow, batch), cka_matrix(model, BlockDepth::deep, batch)};
    }
    return rec;
}

// ---------------------------------------------------------------------------

Json to_json(const RunRecord& r) {
    Json j;
    j["software_version"] = r.software_version;
    j["config_hash"] = r.hash;
    j["config"] = to_json(r.config);
    j["seed"] = r.config.seed;
    j["class_order"] = r.class_order;
    const auto& l = r.budget.ledger;
    j["budget"] = {{"target_bytes", r.budget.target_bytes},
                   {"model_param_count", l.model_param_count},
                   {"bytes_per_param", l.bytes_per_param},
                   {"exemplar_count", l.exemplar_count},
                   {"bytes_per_exemplar", l.bytes_per_exemplar},
                   {"model_bytes", l.model_bytes()},
                   {"exemplar_bytes", l.exemplar_bytes()},
                   {"total_bytes", l.total_bytes()},
                   {"total_mb", total_megabytes(l)},
                   {"model_ratio", model_ratio(l)}};
    Json stages = Json::array();
    for (const auto& s : r.stages) {
        Json sj;
        sj["stage"] = s.result.stage;
        sj["accuracy"] = s.result.accuracy;
        sj["task_accuracies"] = s.result.task_accuracies;
        sj["final_loss"] = s.result.final_loss;
        sj["exemplars_stored"] = s.result.exemplars_stored;
        sj["model_params"] = s.result.model_params;
        sj["total_bytes"] = s.total_bytes;
        sj["wall_time_s"] = s.result.wall_time_s;
        if (s.result.probes) {
            sj["grad_norm"] = s.result.probes->grad_norm;
            sj["shift_mse"] = s.result.probes->shift_mse;
        }
        stages.push_back(sj);
    }
    j["stages"] = stages;
    j["average_accuracy"] = r.average_accuracy;
    j["last_accuracy"] = r.last_accuracy;
    j["memory_mb"] = r.memory_mb;
    if (r.cka) j["cka"] = {{"shallow", matrix_json(r.cka->shallow)}, {"deep", matrix_json(r.cka->deep)}};
    return j;
}

RunRecord record_from_json(const Json& j) {
    try {
        RunRecord r;
        r.config = parse_config(j.at("config"));
        r.hash = j.at("config_hash").get<std::string>();
        r.software_version = j.at("software_version").get<std::string>();
        r.class_order = j.at("class_order").get<std::vector<std::size_t>>();
        const auto& b = j.at("budget");
        r.budget.target_bytes = b.at("target_bytes").get<std::size_t>();
        r.budget.bytes_per_exemplar = b.at("bytes_per_exemplar").get<std::size_t>();
        r.budget.ledger = BudgetLedger{b.at("model_param_count").get<std::uint64_t>(), b.at("bytes_per_param").get<std::uint64_t>(),
                                       b.at("exemplar_count").get<std::uint64_t>(),
                                       b.at("bytes_per_exemplar").get<std::uint64_t>()};
        for (const auto& sj : j.at("stages")) {
            StageRecord s;
            s.result.stage = sj.at("stage").get<std::size_t>();
            s.result.accuracy = sj.at("accuracy").get<double>();
            s.result.task_accuracies = sj.at("task_accuracies").get<std::vector<double>>();
            s.result.final_loss = sj.at("final_loss").get<double>();
            s.result.exemplars_stored = sj.at("exemplars_stored").get<std::size_t>();
            s.result.model_params = sj.at("model_params").get<std::size_t>();
            s.result.wall_time_s = get_or(sj, "wall_time_s", 0.0);
            s.total_bytes = sj.at("total_bytes").get<std::size_t>();
            if (sj.contains("grad_norm"))
                s.result.probes = StageProbes{sj.at("grad_norm").get<std::vector<double>>(),
                                              sj.at("shift_mse").get<std::vector<double>>()};
            r.stages.push_back(std::move(s));
        }
        r.average_accuracy = j.at("average_accuracy").get<double>();
        r.last_accuracy = j.at("last_accuracy").get<double>();
        r.memory_mb = j.at("memory_mb").get<double>();
        if (j.contains("cka"))
            r.cka = CkaRecord{j.at("cka").at("shallow").get<std::vector<std::vector<double>>>(),
                              j.at("cka").at("deep").get<std::vector<std::vector<double>>>()};
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ContractError(std::string("run record: ") + e.what());
    }
}

std::string timing_free_dump(const RunRecord& r) {
    Json j = to_json(r);
    for (auto& s : j["stages"]) s.erase("wall_time_s");
    return j.dump(2);
}

// ---------------------------------------------------------------------------

namespace {

PMCurve curve_of(std::vector<const RunRecord*> runs) {
    std::sort(runs.begin(), runs.end(), [](auto* a, auto* b) { return a->memory_mb < b->memory_mb; });
    std::vector<CurvePoint> pts;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (i > 0 && runs[i]->memory_mb == runs[i - 1]->memory_mb)
            throw ContractError("curve: duplicate memory point " + num(runs[i]->memory_mb) + " MB for method " +
                                to_string(runs[i]->config.method));
        pts.push_back({runs[i]->memory_mb, runs[i]->average_accuracy, runs[i]->last_accuracy});
    }
    return PMCurve(std::move(pts));
}

}  // namespace

std::string emit_curve(std::vector<RunRecord> records) {
    if (records.empty()) throw ContractError("emit_curve: no records");
    const auto& first = records.front().config;
    std::vector<const RunRecord*> runs;
    for (const auto& r : records) {
        if (r.config.method != first.method) throw ContractError("emit_curve: records mix methods");
        if (r.config.split_base != first.split_base || r.config.split_increment != first.split_increment)
            throw ContractError("emit_curve: records mix splits");
        runs.push_back(&r);
    }
    const PMCurve curve = curve_of(runs);
    std::ostringstream out;
    out << "memory_MB,avg_acc,last_acc\n";
    for (const auto& p : curve.points()) out << num(p.memory_mb) << ',' << num(p.avg_acc) << ',' << num(p.last_acc) << '\n';
    return out.str();
}

std::string metrics_table(const std::vector<RunRecord>& records) {
    if (records.empty()) throw ContractError("metrics_table: no records");
    std::map<Method, std::vector<const RunRecord*>> by_method;
    for (const auto& r : records) by_method[r.config.method].push_back(&r);
    std::ostringstream out;
    out << "method,memory_MB,avg,last,AUC-A,AUC-L,APM-S,APM-E\n";
    for (const auto& [method, runs] : by_method) {
        const PMCurve curve = curve_of(runs);
        const auto& lo = curve.points().front();
        const auto& hi = curve.points().back();
        out << to_string(method) << ',' << fixed2(hi.memory_mb) << ',' << fixed2(hi.avg_acc) << ','
            << fixed2(hi.last_acc) << ',';
        if (curve.size() >= 2)
            out << num(auc(curve, CurveSeries::average)) << ',' << num(auc(curve, CurveSeries::last)) << ',';
        else
            out << ",,";
        out << num(apm(lo.avg_acc, lo.memory_mb)) << ',' << num(apm(hi.avg_acc, hi.memory_mb)) << '\n';
    }
    return out.str();
}

ProbeFigure probe_figure_from_string(const std::string& s) {
    if (s == "gradnorm") return ProbeFigure::gradnorm;
    if (s == "shift") return ProbeFigure::shift;
    if (s == "cka") return ProbeFigure::cka;
    throw ContractError("unknown probe figure '" + s + "' (expected gradnorm, shift or cka)");
}

std::string probe_csv(const RunRecord& r, ProbeFigure figure) {
    std::ostringstream out;
    if (figure == ProbeFigure::cka) {
        if (!r.cka) throw ContractError("run has no CKA matrices (probes disabled or a single backbone)");
        out << "depth,row,col,value\n";
        auto emit = [&](const char* depth, const std::vector<std::vector<double>>& m) {
            for (std::size_t i = 0; i < m.size(); ++i)
                for (std::size_t k = 0; k < m[i].size(); ++k)
                    out << depth << ',' << i << ',' << k << ',' << num(m[i][k]) << '\n';
        };
        emit("shallow", r.cka->shallow);
        emit("deep", r.cka->deep);
        return out.str();
    }
    out << "block,value,stage\n";
    bool any = false;
    for (const auto& s : r.stages) {
        if (!s.result.probes) continue;
        any = true;
        const auto& v = figure == ProbeFigure::gradnorm ? s.result.probes->grad_norm : s.result.probes->shift_mse;
        for (std::size_t b = 0; b < v.size(); ++b) out << b << ',' << num(v[b]) << ',' << s.result.stage << '\n';
    }
    if (!any) throw ContractError("run has no probe traces; enable probes in the config");
    return out.str();
}

}  // namespace cil
