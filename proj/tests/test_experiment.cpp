#include <doctest.h>

#include "cil/errors.hpp"
#include "cil/experiment.hpp"
#include "cil/metrics.hpp"

#include <algorithm>
#include <sstream>

using namespace cil;

namespace {

Json tiny(const std::string& method) {
    return Json::parse(R"({
      "method": ")" + method + R"(",
      "seed": 3,
      "dataset": {"synthetic": {"classes": 6, "train_per_class": 20, "test_per_class": 5, "dim": 4, "spread": 0.4}},
      "split": {"base": 0, "increment": 2},
      "backbone": {"hidden_dim": 6, "num_blocks": 3},
      "budget": {"base_exemplars": 6, "align_to": "der"},
      "learner": {"epochs": 3, "batch_size": 16, "learning_rate": 0.05, "lr_schedule": [{"epoch": 2, "factor": 0.1}]},
      "probes": {"enabled": true, "cka_samples": 12}
    })");
}

}  // namespace

TEST_CASE("config parsing and defaults") {
    const auto c = parse_config(tiny("memo"));
    CHECK(c.method == Method::memo);
    CHECK(c.learner.method == Method::memo);
    CHECK(c.learner.seed == 3);
    CHECK(c.dataset.synthetic->seed == 3);
    CHECK(c.learner.epochs == 3);
    CHECK(c.learner.lambda.kind == LambdaPolicy::Kind::class_ratio);
    CHECK(c.budget.align_to == Method::der);

    const auto d = parse_config(Json::parse(R"({"method": "replay", "budget": {"target_mb": 1.0}})"));
    CHECK(d.learner.epochs == 30);
    CHECK(d.learner.sgd.schedule == std::vector<LrMilestone>{{15, 0.1}, {25, 0.1}});
    CHECK(d.dataset.synthetic->num_classes == 10);
    CHECK(d.dataset.synthetic->dim == 16);
    CHECK(d.split_increment == 2);

    const auto p = parse_config(Json::parse(R"({"method": "icarl", "budget": {"target_mb": 1.0},
                                                "learner": {"profile": "full", "lambda": 0.25}})"));
    CHECK(p.learner.epochs == 170);
    CHECK(p.learner.batch_size == 128);
    CHECK(p.learner.sgd.schedule == std::vector<LrMilestone>{{80, 0.1}, {150, 0.1}});
    CHECK(p.learner.lambda == LambdaPolicy::fixed(0.25));
}

TEST_CASE("config errors") {
    auto j = tiny("memo");
    j["learner"]["epoch"] = 3;
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("unknown key 'epoch'"), ContractError);
    j = tiny("memo");
    j["budget"]["target_mb"] = 1.0;
    CHECK_THROWS_AS(parse_config(j), ContractError);
    j = tiny("memo");
    j["method"] = "bic";
    CHECK_THROWS_AS(parse_config(j), ContractError);
    j = tiny("memo");
    j["seed"] = "three";
    CHECK_THROWS_AS(parse_config(j), ContractError);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"method": "replay"})")), ContractError);
}

TEST_CASE("config JSON round trip keeps the hash") {
    const auto c = parse_config(tiny("wa"));
    const auto again = parse_config(to_json(c));
    CHECK(to_json(again) == to_json(c));
    CHECK(config_hash(again) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
    CHECK(config_hash(parse_config(tiny("der"))) != config_hash(c));
}

TEST_CASE("budget plan: every method fits the shared target") {
    const BackboneSpec spec{4, 6, 3, 0};
    std::uint64_t target = 0;
    for (auto m : {"replay", "icarl", "wa", "der", "memo"}) {
        const auto c = parse_config(tiny(m));
        const auto plan = plan_budget(c, spec, 3, 6);
        if (target == 0) target = plan.target_bytes;
        CHECK(plan.target_bytes == target);
        CHECK(plan.ledger.total_bytes() <= plan.target_bytes);
        CHECK(plan.target_bytes - plan.ledger.total_bytes() < plan.bytes_per_exemplar);
        CHECK(plan.bytes_per_exemplar == 4);
        CHECK(plan.ledger.exemplar_count >= 6);
    }
    CHECK(final_param_count(Method::der, spec, 3, 6) - final_param_count(Method::memo, spec, 3, 6) ==
          2 * spec.trunk_params());
}

TEST_CASE("run: budget, final model size, probes") {
    for (auto m : {"replay", "icarl", "wa", "der", "memo"}) {
        const auto rec = run_experiment(parse_config(tiny(m)));
        REQUIRE(rec.stages.size() == 3);
        for (const auto& s : rec.stages) {
            CHECK(s.total_bytes <= rec.budget.target_bytes);
            REQUIRE(s.result.probes);
            CHECK(s.result.probes->grad_norm.size() == 3);
            for (double v : s.result.probes->grad_norm) CHECK(v >= 0.0);
            for (double v : s.result.probes->shift_mse) CHECK(v >= 0.0);
        }
        CHECK(rec.stages.back().result.model_params == rec.budget.ledger.model_param_count);
        CHECK(rec.class_order.size() == 6);
        const bool multi = std::string(m) == "der" || std::string(m) == "memo";
        CHECK(rec.cka.has_value() == multi);
        if (rec.cka)
            for (const auto& row : rec.cka->deep)
                for (double v : row) CHECK((v >= 0.0 && v <= 1.0 + 1e-9));
    }
}

TEST_CASE("run: single task, determinism, record round trip") {
    auto j = tiny("replay");
    j["split"]["increment"] = 6;
    const auto one = run_experiment(parse_config(j));
    REQUIRE(one.stages.size() == 1);
    CHECK(one.average_accuracy == round2(one.last_accuracy));

    const auto c = parse_config(tiny("memo"));
    const auto a = run_experiment(c);
    const auto b = run_experiment(c);
    CHECK(timing_free_dump(a) == timing_free_dump(b));
    const auto back = record_from_json(Json::parse(to_json(a).dump()));
    CHECK(timing_free_dump(back) == timing_free_dump(a));
}

TEST_CASE("stage context on errors") {
    auto j = tiny("memo");
    j["learner"]["learning_rate"] = 1e300;
    j["learner"]["lr_schedule"] = Json::array();
    try {
        run_experiment(parse_config(j));
        FAIL("expected divergence");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).rfind("stage ", 0) == 0);
    }
}

TEST_CASE("curves and metrics table") {
    std::vector<RunRecord> recs;
    for (double mb : {0.003, 0.002, 0.004}) {
        auto j = tiny("replay");
        j["budget"].erase("align_to");
        j["budget"]["target_mb"] = mb;
        j["probes"]["enabled"] = false;
        recs.push_back(run_experiment(parse_config(j)));
    }
    const auto csv = emit_curve(recs);
    CHECK(csv.rfind("memory_MB,avg_acc,last_acc\n", 0) == 0);
    std::vector<double> mbs;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) mbs.push_back(std::stod(line.substr(0, line.find(','))));
    REQUIRE(mbs.size() == 3);
    CHECK(std::is_sorted(mbs.begin(), mbs.end()));
    CHECK(emit_curve({recs[0]}).find('\n') != emit_curve({recs[0]}).rfind('\n'));

    auto dup = recs;
    dup.push_back(recs[0]);
    CHECK_THROWS_AS(emit_curve(dup), ContractError);
    auto mixed = recs;
    mixed[1].config.method = Method::icarl;
    CHECK_THROWS_AS(emit_curve(mixed), ContractError);

    const auto table = metrics_table(recs);
    CHECK(table.rfind("method,memory_MB,avg,last,AUC-A,AUC-L,APM-S,APM-E\nreplay,", 0) == 0);
    const auto single = metrics_table({recs[0]});
    CHECK(single.find(",,") != std::string::npos);
}

TEST_CASE("probe CSV") {
    const auto rec = run_experiment(parse_config(tiny("der")));
    const auto g = probe_csv(rec, ProbeFigure::gradnorm);
    CHECK(g.rfind("block,value,stage\n0,", 0) == 0);
    CHECK(std::count(g.begin(), g.end(), '\n') == 1 + 3 * 3);
    const auto c = probe_csv(rec, ProbeFigure::cka);
    CHECK(std::count(c.begin(), c.end(), '\n') == 1 + 2 * 9);
    CHECK_THROWS_AS(probe_figure_from_string("tsne"), ContractError);
    auto j = tiny("replay");
    j["probes"]["enabled"] = false;
    const auto plain = run_experiment(parse_config(j));
    CHECK_THROWS_AS(probe_csv(plain, ProbeFigure::shift), ContractError);
    CHECK_THROWS_AS(probe_csv(plain, ProbeFigure::cka), ContractError);
}
