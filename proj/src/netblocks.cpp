#include "cil/netblocks.hpp"

#include <algorithm>
#include <cmath>

#include "cil/errors.hpp"

namespace cil {

void BackboneSpec::validate() const {
    if (input_dim == 0 || hidden_dim == 0) throw ContractError("backbone: dimensions must be positive");
    if (num_blocks < 2) throw ContractError("backbone: need at least 2 blocks");
    const std::size_t k = decomposition();
    if (k < 1 || k >= num_blocks)
        throw ContractError("backbone: decomposition index " + std::to_string(k) + " outside [1, " +
                            std::to_string(num_blocks) + ")");
}

std::size_t BackboneSpec::param_count(std::size_t first, std::size_t last) const {
    std::size_t n = 0;
    for (std::size_t b = first; b < last; ++b) n += block_fan_in(b) * hidden_dim + hidden_dim;
    return n;
}

bool BackboneState::frozen() const {
    return std::all_of(blocks.begin(), blocks.end(), [](const Block& b) { return b.frozen(); });
}

void BackboneState::set_frozen(bool f) {
    for (auto& b : blocks) b.set_frozen(f);
}

std::size_t BackboneState::param_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.param_count();
    return n;
}

double init_bound(std::size_t fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

namespace {

Tensor uniform_tensor(std::size_t rows, std::size_t cols, double bound, Prng& rng) {
    Tensor t({rows, cols});
    for (auto& v : t.storage()) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

BackboneState build_blocks(const BackboneSpec& spec, std::size_t first, std::size_t last, Prng& rng) {
    BackboneState bs;
    bs.first_block = first;
    for (std::size_t b = first; b < last; ++b) {
        const std::size_t fan_in = spec.block_fan_in(b);
        Block blk;
        blk.weight = Parameter("block" + std::to_string(b) + ".weight",
                               uniform_tensor(fan_in, spec.hidden_dim, init_bound(fan_in), rng));
        blk.bias = Parameter("block" + std::to_string(b) + ".bias", Tensor({spec.hidden_dim}));
        bs.blocks.push_back(std::move(blk));
    }
    return bs;
}

BackboneState build(const BackboneSpec& spec, std::uint64_t seed) {
    spec.validate();
    Prng rng(seed);
    return build_blocks(spec, 0, spec.num_blocks, rng);
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::single: return "single";
        case Strategy::full_expand: return "full_expand";
        case Strategy::decoupled_expand: return "decoupled_expand";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "single") return Strategy::single;
    if (s == "full_expand") return Strategy::full_expand;
    if (s == "decoupled_expand") return Strategy::decoupled_expand;
    throw ContractError("unknown strategy '" + s + "'");
}

std::string to_string(FreezePolicy p) {
    switch (p) {
        case FreezePolicy::always: return "always";
        case FreezePolicy::never: return "never";
        case FreezePolicy::automatic: return "auto";
    }
    return "?";
}

FreezePolicy freeze_policy_from_string(const std::string& s) {
    if (s == "always") return FreezePolicy::always;
    if (s == "never") return FreezePolicy::never;
    if (s == "auto") return FreezePolicy::automatic;
    throw ContractError("unknown freeze policy '" + s + "'");
}

std::string to_string(ClassifierInit i) { return i == ClassifierInit::zero ? "zero" : "random"; }

ClassifierInit classifier_init_from_string(const std::string& s) {
    if (s == "random") return ClassifierInit::random;
    if (s == "zero") return ClassifierInit::zero;
    throw ContractError("unknown classifier init '" + s + "'");
}

Tensor ExpandableModel::fresh_classifier(std::size_t rows, std::size_t cols, Prng& rng) const {
    if (classifier_init_ == ClassifierInit::zero) return Tensor({rows, cols});
    return uniform_tensor(rows, cols, init_bound(rows), rng);
}

ExpandableModel ExpandableModel::create(Strategy strategy, const BackboneSpec& spec, std::size_t initial_classes,
                                        std::uint64_t seed, ClassifierInit init) {
    spec.validate();
    if (initial_classes == 0) throw ContractError("model: need at least one class");
    ExpandableModel m;
    m.strategy_ = strategy;
    m.spec_ = spec;
    m.classifier_init_ = init;
    Prng rng(seed);
    if (strategy == Strategy::decoupled_expand) {
        m.trunk_ = build_blocks(spec, 0, spec.decomposition(), rng);
        m.branches_.push_back(build_blocks(spec, spec.decomposition(), spec.num_blocks, rng));
    } else {
        m.branches_.push_back(build_blocks(spec, 0, spec.num_blocks, rng));
    }
    // The first classifier is always randomly initialized; `init` governs
    // entries added by later expansions.
    m.classifier_ = Parameter("classifier", uniform_tensor(spec.hidden_dim, initial_classes,
                                                           init_bound(spec.hidden_dim), rng));
    return m;
}

Var ExpandableModel::run_blocks(Graph& g, BackboneState& bs, Var x) {
    for (auto& blk : bs.blocks) x = g.relu(g.affine(x, g.param(blk.weight), g.param(blk.bias)));
    return x;
}

ExpandableModel::Forward ExpandableModel::forward(Graph& g, const Tensor& x) {
    if (x.rank() != 2 || x.cols() != spec_.input_dim)
        throw ContractError("forward: expected input with " + std::to_string(spec_.input_dim) + " columns, got " +
                            shape_str(x.shape()));
    if (branches_.empty()) throw ContractError("forward: model has no branches");
    Var in = g.constant(x);
    if (trunk_) in = run_blocks(g, *trunk_, in);
    std::vector<Var> outs;
    outs.reserve(branches_.size());
    for (auto& br : branches_) outs.push_back(run_blocks(g, br, in));
    Var feats = outs.size() == 1 ? outs.front() : g.concat_cols(outs);
    if (g.value(feats).cols() != classifier_.value.rows())
        throw ContractError("forward: feature dim " + std::to_string(g.value(feats).cols()) +
                            " does not match classifier rows " + std::to_string(classifier_.value.rows()));
    Var logits = g.linear(feats, g.param(classifier_));
    return Forward{feats, outs.back(), logits};
}

Var ExpandableModel::aux_logits(Graph& g, Var newest_branch) {
    if (!aux_classifier_) throw ContractError("aux_logits: no auxiliary classifier");
    return g.linear(newest_branch, g.param(*aux_classifier_));
}

Tensor ExpandableModel::features(const Tensor& x) {
    Graph g(Graph::Mode::inference);
    return g.value(forward(g, x).features);
}

Tensor ExpandableModel::logits(const Tensor& x) {
    Graph g(Graph::Mode::inference);
    return g.value(forward(g, x).logits);
}

std::vector<Tensor> ExpandableModel::block_outputs(std::size_t branch, const Tensor& x) {
    if (branch >= branches_.size()) throw ContractError("block_outputs: branch index out of range");
    Graph g(Graph::Mode::inference);
    std::vector<Tensor> outs;
    Var h = g.constant(x);
    auto run = [&](BackboneState& bs) {
        for (auto& blk : bs.blocks) {
            h = g.relu(g.affine(h, g.param(blk.weight), g.param(blk.bias)));
            outs.push_back(g.value(h));
        }
    };
    if (trunk_) run(*trunk_);
    run(branches_[branch]);
    return outs;
}

void ExpandableModel::grow_classes(std::size_t new_classes, std::uint64_t seed) {
    if (new_classes == 0) throw ContractError("grow_classes: no new classes");
    Prng rng(seed);
    const Tensor& old = classifier_.value;
    const std::size_t rows = old.rows(), c_old = old.cols(), c_new = c_old + new_classes;
    Tensor w = fresh_classifier(rows, c_new, rng);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < c_old; ++c) w(r, c) = old(r, c);
    classifier_ = Parameter("classifier", std::move(w));
}

void ExpandableModel::expand_for_task(std::size_t new_classes, std::uint64_t seed) {
    if (strategy_ == Strategy::single) throw ContractError("expand_for_task: single-backbone model cannot expand");
    if (new_classes == 0) throw ContractError("expand_for_task: no new classes");
    Prng rng(seed);
    for (auto& br : branches_) br.set_frozen(true);
    BackboneState fresh = strategy_ == Strategy::decoupled_expand
                              ? build_blocks(spec_, spec_.decomposition(), spec_.num_blocks, rng)
                              : build_blocks(spec_, 0, spec_.num_blocks, rng);
    fresh.creation_stage = static_cast<int>(branches_.size());
    branches_.push_back(std::move(fresh));

    const Tensor& old = classifier_.value;
    const std::size_t old_rows = old.rows(), c_old = old.cols();
    const std::size_t rows = feature_dim(), cols = c_old + new_classes;
    Tensor w = fresh_classifier(rows, cols, rng);
    for (std::size_t r = 0; r < old_rows; ++r)
        for (std::size_t c = 0; c < c_old; ++c) w(r, c) = old(r, c);
    classifier_ = Parameter("classifier", std::move(w));

    aux_classifier_ = Parameter("aux_classifier", uniform_tensor(spec_.hidden_dim, new_classes + 1,
                                                                 init_bound(spec_.hidden_dim), rng));
}

void ExpandableModel::set_generalized_freeze(FreezePolicy policy, std::size_t base_class_count,
                                             std::size_t threshold) {
    if (strategy_ != Strategy::decoupled_expand || !trunk_)
        throw ContractError("set_generalized_freeze: only meaningful for the decoupled strategy");
    bool freeze = false;
    switch (policy) {
        case FreezePolicy::always: freeze = true; break;
        case FreezePolicy::never: freeze = false; break;
        case FreezePolicy::automatic: freeze = base_class_count >= threshold; break;
    }
    trunk_->set_frozen(freeze);
}

std::size_t ExpandableModel::param_count() const {
    std::size_t n = classifier_.value.size();
    if (trunk_) n += trunk_->param_count();
    for (const auto& br : branches_) n += br.param_count();
    return n;
}

std::vector<Parameter*> ExpandableModel::parameters() {
    std::vector<Parameter*> ps;
    auto add = [&](BackboneState& bs) {
        for (auto& blk : bs.blocks) {
            ps.push_back(&blk.weight);
            ps.push_back(&blk.bias);
        }
    };
    if (trunk_) add(*trunk_);
    for (auto& br : branches_) add(br);
    ps.push_back(&classifier_);
    if (aux_classifier_) ps.push_back(&*aux_classifier_);
    return ps;
}

std::vector<Block*> ExpandableModel::active_blocks() {
    std::vector<Block*> out;
    if (trunk_)
        for (auto& b : trunk_->blocks) out.push_back(&b);
    for (auto& b : branches_.back().blocks) out.push_back(&b);
    return out;
}

}  // namespace cil
