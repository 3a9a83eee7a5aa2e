#include "cil/stream.hpp"

#include <string>

#include "cil/errors.hpp"
#include "cil/prng.hpp"

namespace cil {

void SplitSpec::validate() const {
    const std::string tag = " (x=" + std::to_string(base) + ", y=" + std::to_string(increment) +
                            ", C=" + std::to_string(total) + ")";
    if (total == 0) throw ContractError("split: no classes" + tag);
    if (increment == 0) throw ContractError("split: increment must be at least 1" + tag);
    if (base > total) throw ContractError("split: more base classes than classes" + tag);
    if (base == 0 && total % increment != 0) throw ContractError("split: increment does not divide class count" + tag);
    if (base > 0 && (total - base) % increment != 0)
        throw ContractError("split: increment does not divide the non-base classes" + tag);
}

std::size_t SplitSpec::stage_count() const {
    validate();
    return base == 0 ? total / increment : 1 + (total - base) / increment;
}

std::size_t TaskStream::seen_after(std::size_t stage) const {
    std::size_t n = 0;
    for (std::size_t s = 0; s <= stage && s < stage_classes.size(); ++s) n += stage_classes[s].size();
    return n;
}

std::size_t TaskStream::task_of_class(std::size_t position) const {
    for (std::size_t s = 0; s < stage_classes.size(); ++s)
        for (auto c : stage_classes[s])
            if (c == position) return s;
    throw ContractError("task_of_class: unknown class " + std::to_string(position));
}

TaskStream make_stream(const Dataset& data, const SplitSpec& split, std::uint64_t class_order_seed) {
    split.validate();
    if (split.total != data.num_classes)
        throw ContractError("make_stream: split covers " + std::to_string(split.total) + " classes, dataset has " +
                            std::to_string(data.num_classes));
    TaskStream ts;
    ts.class_order = shuffle_class_order(split.total, class_order_seed);
    ts.position_of.resize(split.total);
    for (std::size_t p = 0; p < split.total; ++p) ts.position_of[ts.class_order[p]] = p;

    std::size_t next = 0;
    auto take = [&](std::size_t count) {
        std::vector<std::size_t> cls;
        for (std::size_t i = 0; i < count; ++i) cls.push_back(next++);
        ts.stage_classes.push_back(std::move(cls));
    };
    if (split.base > 0) take(split.base);
    while (next < split.total) take(split.increment);

    std::vector<std::size_t> stage_of(split.total);
    for (std::size_t s = 0; s < ts.stage_classes.size(); ++s)
        for (auto c : ts.stage_classes[s]) stage_of[c] = s;
    ts.train_ids.resize(ts.stages());
    ts.test_ids.resize(ts.stages());
    for (std::size_t i = 0; i < data.train.size(); ++i)
        ts.train_ids[stage_of[ts.position_of[data.train.labels[i]]]].push_back(i);
    for (std::size_t i = 0; i < data.test.size(); ++i)
        ts.test_ids[stage_of[ts.position_of[data.test.labels[i]]]].push_back(i);
    return ts;
}

}  // namespace cil
