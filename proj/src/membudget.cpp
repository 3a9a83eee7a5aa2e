#include "cil/membudget.hpp"

#include <cmath>
#include <string>

#include "cil/errors.hpp"

namespace cil {

void BudgetLedger::validate() const {
    if (bytes_per_param == 0 || bytes_per_exemplar == 0)
        throw ContractError("ledger: bytes per parameter and per exemplar must be at least 1");
}

std::uint64_t exemplar_equivalent(std::uint64_t param_count, std::uint64_t bytes_per_param,
                                  std::uint64_t bytes_per_exemplar) {
    if (bytes_per_param == 0 || bytes_per_exemplar == 0)
        throw ContractError("exemplar_equivalent: byte sizes must be positive");
    return param_count * bytes_per_param / bytes_per_exemplar;
}

double bytes_to_megabytes(std::uint64_t bytes) { return static_cast<double>(bytes) / kBytesPerMegabyte; }

std::uint64_t megabytes_to_bytes(double mb) {
    if (!(mb >= 0.0)) throw ContractError("megabytes_to_bytes: negative or NaN size");
    return static_cast<std::uint64_t>(std::floor(mb * kBytesPerMegabyte));
}

double total_megabytes(const BudgetLedger& ledger) {
    ledger.validate();
    return std::round(bytes_to_megabytes(ledger.total_bytes()) * 100.0) / 100.0;
}

std::uint64_t align_budget(std::uint64_t target_total_bytes, std::uint64_t model_bytes,
                           std::uint64_t bytes_per_exemplar, std::uint64_t base_exemplars) {
    if (bytes_per_exemplar == 0) throw ContractError("align_budget: bytes per exemplar must be positive");
    const std::uint64_t floor_bytes = model_bytes + base_exemplars * bytes_per_exemplar;
    if (target_total_bytes < floor_bytes)
        throw ContractError("budget below method floor: target " + std::to_string(target_total_bytes) +
                            " B < model " + std::to_string(model_bytes) + " B + " + std::to_string(base_exemplars) +
                            " base exemplars");
    return base_exemplars + (target_total_bytes - floor_bytes) / bytes_per_exemplar;
}

double model_ratio(const BudgetLedger& ledger) {
    ledger.validate();
    const std::uint64_t total = ledger.total_bytes();
    if (total == 0) throw ContractError("model_ratio: ledger is empty");
    return static_cast<double>(ledger.model_bytes()) / static_cast<double>(total);
}

}  // namespace cil
