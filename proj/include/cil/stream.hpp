#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cil/dataset.hpp"

namespace cil {

/// Base-x Inc-y: x classes in the first stage (none when x = 0), then y new
/// classes per stage.
struct SplitSpec {
    std::size_t base = 0;
    std::size_t increment = 1;
    std::size_t total = 0;

    void validate() const;
    std::size_t stage_count() const;
    bool operator==(const SplitSpec&) const = default;
};

/// Classes are relabeled by their position in the shuffled class order, so
/// stage b owns a contiguous label range and the classifier column of a class
/// never moves.
struct TaskStream {
    std::vector<std::size_t> class_order;          // position -> original label
    std::vector<std::size_t> position_of;          // original label -> position
    std::vector<std::vector<std::size_t>> stage_classes;  // positions, per stage
    std::vector<std::vector<std::size_t>> train_ids;      // train rows, per stage
    std::vector<std::vector<std::size_t>> test_ids;       // test rows, per stage

    std::size_t stages() const noexcept { return stage_classes.size(); }
    std::size_t seen_after(std::size_t stage) const;  // |Y_1 u ... u Y_stage|
    std::size_t task_of_class(std::size_t position) const;
};

TaskStream make_stream(const Dataset& data, const SplitSpec& split, std::uint64_t class_order_seed);

}  // namespace cil
