#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cil/autodiff.hpp"
#include "cil/netblocks.hpp"

namespace cil {

/// L2 norm of the concatenated weight and bias gradients of each block;
/// frozen blocks report 0.
std::vector<double> block_grad_norms(std::span<Block* const> blocks);

using LossFn = std::function<Var(Graph&, ExpandableModel&, const ExpandableModel::Forward&)>;

/// One forward/backward pass of `loss` on `batch`, then block_grad_norms over
/// the model's active path. Parameter gradients are zeroed before and left
/// populated after.
std::vector<double> grad_norm_per_block(ExpandableModel& model, const Tensor& batch, const LossFn& loss);

/// Flattened parameters of each block, for shift measurements.
using BlockSnapshot = std::vector<std::vector<double>>;
BlockSnapshot snapshot_blocks(std::span<Block* const> blocks);

/// Per block, mean of (last - first)^2 over its parameters.
std::vector<double> block_shift_mse(const BlockSnapshot& first, const BlockSnapshot& last);

/// Linear centered kernel alignment of two representations of the same N
/// inputs. Columns are centered internally; returns 0 if either side is
/// constant.
double linear_cka(const Tensor& x, const Tensor& y);

/// Pairwise linear CKA; symmetric with unit diagonal for non-constant inputs.
std::vector<std::vector<double>> cka_matrix(std::span<const Tensor> representations);

enum class BlockDepth { shallow, deep };
BlockDepth block_depth_from_string(const std::string& s);
std::size_t block_index(const BackboneSpec& spec, BlockDepth depth);

/// CKA between the outputs of block `block` of every task backbone of `model`
/// fed the same batch. Needs at least two backbones.
std::vector<std::vector<double>> cka_matrix(ExpandableModel& model, std::size_t block, const Tensor& batch);
std::vector<std::vector<double>> cka_matrix(ExpandableModel& model, BlockDepth depth, const Tensor& batch);

/// Mean of the strictly off-diagonal entries.
double mean_off_diagonal(const std::vector<std::vector<double>>& m);

}  // namespace cil
