#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cil/tensor.hpp"

namespace cil {

/// Instances of one partition (train or test), one row per instance.
struct DataSplit {
    Tensor features;
    std::vector<std::size_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols(); }
    bool operator==(const DataSplit&) const = default;
};

struct Dataset {
    DataSplit train;
    DataSplit test;
    std::size_t num_classes = 0;

    std::size_t dim() const noexcept { return train.dim(); }
    void validate() const;
    bool operator==(const Dataset&) const = default;
};

struct SynthSpec {
    std::size_t num_classes = 10;
    std::size_t train_per_class = 100;
    std::size_t test_per_class = 20;
    std::size_t dim = 16;
    double spread = 0.35;
    std::uint64_t seed = 0;
};

/// Gaussian blobs: class c is centered at a random point on the unit sphere,
/// samples add spread * N(0, 1) per coordinate. Values are rounded to float
/// precision so the dataset survives a CILD round trip unchanged. Train
/// instances are class-major (all of class 0, then class 1, ...).
Dataset synth_dataset(const SynthSpec& spec);

// CILD binary format (little-endian):
//   "CILD" | u16 version=1 | u32 n_samples | u32 feature_dim | u32 n_classes
//   | f32 features[n_samples * feature_dim] row-major | u16 labels[n_samples]
inline constexpr std::uint16_t kCildVersion = 1;
inline constexpr std::size_t kCildHeaderBytes = 4 + 2 + 4 + 4 + 4;

void write_cild(const std::filesystem::path& path, const DataSplit& split, std::size_t num_classes);
// CSV with header "label,f0,f1,...".
void write_csv(const std::filesystem::path& path, const DataSplit& split);

struct LoadedSplit {
    DataSplit split;
    std::size_t num_classes = 0;  // from the CILD header, or max label + 1 for CSV
};

/// Reads a CILD file, or a CSV file when the content does not start with the
/// CILD magic and the extension is .csv.
LoadedSplit load_split(const std::filesystem::path& path);
LoadedSplit parse_cild(const std::vector<std::uint8_t>& bytes);

Dataset load_dataset(const std::filesystem::path& train, const std::filesystem::path& test);

}  // namespace cil
