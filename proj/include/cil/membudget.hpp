#pragma once

#include <cstdint>

namespace cil {

inline constexpr double kBytesPerMegabyte = 1048576.0;  // 2^20

/// Memory cost of one run: stored model parameters plus stored exemplars.
struct BudgetLedger {
    std::uint64_t model_param_count = 0;
    std::uint64_t bytes_per_param = 4;
    std::uint64_t exemplar_count = 0;
    std::uint64_t bytes_per_exemplar = 1;

    void validate() const;
    std::uint64_t model_bytes() const { return model_param_count * bytes_per_param; }
    std::uint64_t exemplar_bytes() const { return exemplar_count * bytes_per_exemplar; }
    std::uint64_t total_bytes() const { return model_bytes() + exemplar_bytes(); }

    bool operator==(const BudgetLedger&) const = default;
};

/// How many exemplars fit in the bytes of `param_count` parameters (floor).
std::uint64_t exemplar_equivalent(std::uint64_t param_count, std::uint64_t bytes_per_param,
                                  std::uint64_t bytes_per_exemplar);

double bytes_to_megabytes(std::uint64_t bytes);
std::uint64_t megabytes_to_bytes(double mb);

/// Ledger total in MB, rounded to 2 decimals.
double total_megabytes(const BudgetLedger& ledger);

/// Exemplar count that fills `target_total_bytes` once the model is paid for,
/// never below `base_exemplars`. Throws when the target cannot cover the
/// model plus the base exemplars.
std::uint64_t align_budget(std::uint64_t target_total_bytes, std::uint64_t model_bytes,
                           std::uint64_t bytes_per_exemplar, std::uint64_t base_exemplars);

/// Model bytes / total bytes.
double model_ratio(const BudgetLedger& ledger);

}  // namespace cil
