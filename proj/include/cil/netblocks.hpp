#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cil/autodiff.hpp"
#include "cil/prng.hpp"

namespace cil {

/// Dense backbone layout. Block 0 maps input_dim -> hidden_dim, every later
/// block hidden_dim -> hidden_dim; each block is affine + ReLU. Blocks before
/// decomposition_index form the generalized trunk, the rest the specialized
/// suffix.
struct BackboneSpec {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t num_blocks = 0;
    std::size_t decomposition_index = 0;  // 0 means "num_blocks - 1"

    void validate() const;
    std::size_t decomposition() const { return decomposition_index == 0 ? num_blocks - 1 : decomposition_index; }
    std::size_t block_fan_in(std::size_t block) const { return block == 0 ? input_dim : hidden_dim; }
    // Parameters of blocks [first, last).
    std::size_t param_count(std::size_t first, std::size_t last) const;
    std::size_t backbone_params() const { return param_count(0, num_blocks); }
    std::size_t trunk_params() const { return param_count(0, decomposition()); }
    std::size_t suffix_params() const { return param_count(decomposition(), num_blocks); }

    bool operator==(const BackboneSpec&) const = default;
};

struct Block {
    Parameter weight;
    Parameter bias;

    bool frozen() const { return weight.frozen && bias.frozen; }
    void set_frozen(bool f) {
        weight.frozen = f;
        bias.frozen = f;
    }
    std::size_t param_count() const { return weight.value.size() + bias.value.size(); }
    bool operator==(const Block&) const = default;
};

/// A contiguous run of blocks: a whole backbone, a trunk, or a suffix.
struct BackboneState {
    std::vector<Block> blocks;
    std::size_t first_block = 0;  // depth of blocks[0] within the full backbone
    int creation_stage = 0;

    bool frozen() const;
    void set_frozen(bool f);
    std::size_t param_count() const;
    bool operator==(const BackboneState&) const = default;
};

/// Weights uniform on (-sqrt(6/fan_in), +sqrt(6/fan_in)), biases zero.
BackboneState build(const BackboneSpec& spec, std::uint64_t seed);
BackboneState build_blocks(const BackboneSpec& spec, std::size_t first, std::size_t last, Prng& rng);

double init_bound(std::size_t fan_in);

enum class Strategy { single, full_expand, decoupled_expand };
enum class ClassifierInit { random, zero };
enum class FreezePolicy { always, never, automatic };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);
std::string to_string(FreezePolicy p);
FreezePolicy freeze_policy_from_string(const std::string& s);
std::string to_string(ClassifierInit i);
ClassifierInit classifier_init_from_string(const std::string& s);

/// Feature extractor(s) plus a linear classifier over all classes seen so far.
///
/// single: one backbone, feature dim d.
/// full_expand: one full backbone per task, features concatenated (t*d).
/// decoupled_expand: one shared trunk feeding one specialized suffix per task,
/// suffix outputs concatenated (t*d).
class ExpandableModel {
 public:
    struct Forward {
        Var features;       // concatenated, N x (t*d)
        Var newest_branch;  // N x d, output of the most recent branch
        Var logits;         // N x |Y_b|
    };

    static ExpandableModel create(Strategy strategy, const BackboneSpec& spec, std::size_t initial_classes,
                                  std::uint64_t seed, ClassifierInit init = ClassifierInit::random);

    Strategy strategy() const noexcept { return strategy_; }
    const BackboneSpec& spec() const noexcept { return spec_; }
    std::size_t num_tasks() const noexcept { return branches_.size(); }
    std::size_t feature_dim() const noexcept { return branches_.size() * spec_.hidden_dim; }
    std::size_t num_classes() const noexcept { return classifier_.value.cols(); }

    const std::optional<BackboneState>& trunk() const noexcept { return trunk_; }
    const std::vector<BackboneState>& branches() const noexcept { return branches_; }
    const Parameter& classifier() const noexcept { return classifier_; }
    Parameter& classifier() noexcept { return classifier_; }
    const std::optional<Parameter>& aux_classifier() const noexcept { return aux_classifier_; }
    void drop_aux_classifier() { aux_classifier_.reset(); }

    Forward forward(Graph& g, const Tensor& x);
    Var aux_logits(Graph& g, Var newest_branch);

    Tensor features(const Tensor& x);
    Tensor logits(const Tensor& x);

    // Output of every block along trunk + branch `b`, shallow to deep.
    std::vector<Tensor> block_outputs(std::size_t branch, const Tensor& x);

    // Single backbone: widen the classifier by `new_classes` columns.
    void grow_classes(std::size_t new_classes, std::uint64_t seed);

    // Expansion strategies only: new branch, freeze old branches, grow and
    // inherit the classifier, create a fresh auxiliary classifier.
    void expand_for_task(std::size_t new_classes, std::uint64_t seed);

    // Decoupled strategy only.
    void set_generalized_freeze(FreezePolicy policy, std::size_t base_class_count, std::size_t threshold = 20);

    void set_classifier_init(ClassifierInit init) noexcept { classifier_init_ = init; }

    // Trunk, branches and classifier; the auxiliary classifier is excluded.
    std::size_t param_count() const;

    // Every parameter, including frozen ones and the auxiliary classifier.
    std::vector<Parameter*> parameters();

    // Blocks on the path through the newest branch, shallow to deep.
    std::vector<Block*> active_blocks();

    bool operator==(const ExpandableModel&) const = default;

 private:
    ExpandableModel() = default;

    Var run_blocks(Graph& g, BackboneState& bs, Var x);
    Tensor fresh_classifier(std::size_t rows, std::size_t cols, Prng& rng) const;

    Strategy strategy_ = Strategy::single;
    BackboneSpec spec_;
    ClassifierInit classifier_init_ = ClassifierInit::random;
    std::optional<BackboneState> trunk_;
    std::vector<BackboneState> branches_;
    Parameter classifier_;
    std::optional<Parameter> aux_classifier_;
};

}  // namespace cil
