#pragma once
// Reference data for the CIFAR-100 budget tables: exact parameter counts of
// the backbones used there and the rows as printed.

#include <cstdint>
#include <string>
#include <vector>

namespace cifar {

inline constexpr std::uint64_t kBytesPerImage = 3 * 32 * 32;
inline constexpr std::uint64_t kTasks = 10;           // Base0 Inc10
inline constexpr std::uint64_t kBaseExemplars = 2000;

// CIFAR ResNet-(6n+2) with parameter-free shortcuts: 3x3 convs without bias,
// batch norm (scale and shift) after each, widths 16/32/64.
struct ResNetCounts {
    std::uint64_t stem, stage1, stage2, stage3;
    std::uint64_t total() const { return stem + stage1 + stage2 + stage3; }
    // Generalized trunk: stem plus the first two stages; the last stage is specialized.
    std::uint64_t trunk() const { return stem + stage1 + stage2; }
    std::uint64_t suffix() const { return stage3; }
};

inline std::uint64_t conv_bn(std::uint64_t in, std::uint64_t out) { return in * out * 9 + 2 * out; }

inline ResNetCounts resnet(std::uint64_t depth) {
    const std::uint64_t n = (depth - 2) / 6;
    ResNetCounts c{};
    c.stem = conv_bn(3, 16);
    c.stage1 = n * 2 * conv_bn(16, 16);
    c.stage2 = conv_bn(16, 32) + conv_bn(32, 32) + (n - 1) * 2 * conv_bn(32, 32);
    c.stage3 = conv_bn(32, 64) + conv_bn(64, 64) + (n - 1) * 2 * conv_bn(64, 64);
    return c;
}

// Two conv blocks (3->64, 64->64), 3x3 convs with bias plus batch norm.
inline std::uint64_t convnet2_block1() { return 3 * 64 * 9 + 64 + 2 * 64; }
inline std::uint64_t convnet2_block2() { return 64 * 64 * 9 + 64 + 2 * 64; }
inline std::uint64_t convnet2() { return convnet2_block1() + convnet2_block2(); }

struct Row {
    std::string method;
    std::uint64_t exemplars;   // |E| as printed
    double s_e_mb;             // S(E) as printed
    int s_e_decimals;
    std::uint64_t params;      // exact, from the architecture
    double model_mb;           // Model Size as printed
    int model_decimals;
};

struct Table {
    std::string name;          // memory size heading
    std::vector<Row> rows;
    std::uint64_t target_bytes;  // total of the reference configuration
};

inline std::vector<Table> tables() {
    const std::uint64_t r32 = resnet(32).total();
    auto der = [](std::uint64_t depth) { return kTasks * resnet(depth).total(); };
    auto memo = [](std::uint64_t depth) { return resnet(depth).trunk() + kTasks * resnet(depth).suffix(); };
    const std::uint64_t der_cnn = kTasks * convnet2();
    const std::uint64_t memo_cnn = convnet2_block1() + kTasks * convnet2_block2();
    auto target = [](std::uint64_t params) { return params * 4 + kBaseExemplars * kBytesPerImage; };

    return {
        {"7.6MB",
         {{"Replay", 2000, 5.85, 2, r32, 1.76, 2},
          {"iCaRL", 2000, 5.85, 2, r32, 1.76, 2},
          {"WA", 2000, 5.85, 2, r32, 1.76, 2},
          {"DER", 2096, 6.14, 2, der_cnn, 1.48, 2},
          {"MEMO", 2118, 6.20, 2, memo_cnn, 1.42, 2}},
         target(r32)},
        {"12.4MB",
         {{"Replay", 3634, 10.64, 2, r32, 1.76, 2},
          {"iCaRL", 3634, 10.64, 2, r32, 1.76, 2},
          {"WA", 3634, 10.64, 2, r32, 1.76, 2},
          {"DER", 2000, 5.85, 2, der(14), 6.55, 2},
          {"MEMO", 2495, 7.32, 2, memo(14), 5.10, 2}},
         target(der(14))},
        {"16.0MB",
         {{"Replay", 4900, 14.3, 1, r32, 1.76, 2},
          {"iCaRL", 4900, 14.3, 1, r32, 1.76, 2},
          {"WA", 4900, 14.3, 1, r32, 1.76, 2},
          {"DER", 2000, 5.85, 2, der(20), 10.2, 1},
          {"MEMO", 2768, 8.10, 2, memo(20), 8.01, 2}},
         target(der(20))},
        {"19.8MB",
         {{"Replay", 6165, 18.06, 2, r32, 1.76, 2},
          {"iCaRL", 6165, 18.06, 2, r32, 1.76, 2},
          {"WA", 6165, 18.06, 2, r32, 1.76, 2},
          {"DER", 2000, 5.85, 2, der(26), 13.9, 1},
          {"MEMO", 3040, 8.91, 2, memo(26), 10.92, 2}},
         target(der(26))},
        {"23.5MB",
         {{"Replay", 7431, 21.76, 2, r32, 1.75, 2},
          {"iCaRL", 7431, 21.76, 2, r32, 1.75, 2},
          {"WA", 7431, 21.76, 2, r32, 1.75, 2},
          {"DER", 2000, 5.86, 2, der(32), 17.68, 2},
          {"MEMO", 3312, 9.7, 1, memo(32), 13.83, 2}},
         target(der(32))},
    };
}

}  // namespace cifar
