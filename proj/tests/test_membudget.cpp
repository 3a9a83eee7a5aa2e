#include <doctest.h>

#include <cmath>

#include "cil/errors.hpp"
#include "cil/membudget.hpp"
#include "support/cifar_reference.hpp"

using namespace cil;

TEST_CASE("exemplar equivalent") {
    CHECK(exemplar_equivalent(463504, 4, 3072) == 603);
    CHECK(exemplar_equivalent(11176512, 4, 150528) == 296);
    CHECK(exemplar_equivalent(768, 4, 3072) == 1);
    for (std::uint64_t p = 0; p < 5000; p += 37)
        CHECK(exemplar_equivalent(p, 4, 3072) <= exemplar_equivalent(p + 37, 4, 3072));
}

TEST_CASE("megabytes are 2^20 bytes, reported to two decimals") {
    CHECK(total_megabytes({463504, 4, 0, 3072}) == doctest::Approx(1.77));
    CHECK(total_megabytes({0, 4, 2000, 3072}) == doctest::Approx(5.86));
    CHECK(total_megabytes({0, 4, 0, 1}) == 0.0);
    CHECK(bytes_to_megabytes(6144000) == doctest::Approx(5.859375));
    CHECK(megabytes_to_bytes(1.0) == 1048576);
}

TEST_CASE("ledger") {
    const BudgetLedger l{100, 4, 10, 16};
    CHECK(l.model_bytes() == 400);
    CHECK(l.exemplar_bytes() == 160);
    CHECK(l.total_bytes() == 560);
    CHECK_THROWS_AS((BudgetLedger{1, 0, 1, 1}.validate()), ContractError);
    CHECK_THROWS_AS((BudgetLedger{1, 4, 1, 0}.validate()), ContractError);
}

TEST_CASE("align budget") {
    const std::uint64_t target = 4635040ULL * 4 + 2000ULL * 3072;
    CHECK(align_budget(target, 463504ULL * 4, 3072, 2000) == 7431);
    CHECK(align_budget(1000 + 5 * 16, 1000, 16, 5) == 5);
    CHECK(align_budget(1000 + 6 * 16, 1000, 16, 5) == 6);
    CHECK(align_budget(1000 + 6 * 16 + 15, 1000, 16, 5) == 6);
    CHECK_THROWS_WITH_AS(align_budget(1000 + 4 * 16, 1000, 16, 5), doctest::Contains("budget below method floor"),
                         ContractError);
    // Round trip: a ledger's own total returns its exemplar count.
    const BudgetLedger l{12345, 4, 321, 48};
    CHECK(align_budget(l.total_bytes(), l.model_bytes(), 48, 0) == 321);
    CHECK(align_budget(l.total_bytes(), l.model_bytes(), 48, 321) == 321);
    // Monotone in the target.
    std::uint64_t prev = 0;
    for (std::uint64_t t = 2000; t < 4000; t += 7) {
        const auto k = align_budget(t, 1000, 16, 0);
        CHECK(k >= prev);
        prev = k;
    }
}

TEST_CASE("model ratio") {
    CHECK(model_ratio({100, 4, 0, 16}) == 1.0);
    CHECK(model_ratio({0, 4, 10, 16}) == 0.0);
    CHECK_THROWS_AS(model_ratio({0, 4, 0, 16}), ContractError);
    // 1.76 MB of 7.61 MB.
    CHECK(model_ratio({463504, 4, 2000, 3072}) == doctest::Approx(0.231).epsilon(0.005));
}

TEST_CASE("reference architectures reproduce the printed parameter counts") {
    CHECK(cifar::resnet(32).total() == 463504);
    CHECK(exemplar_equivalent(cifar::resnet(32).total(), 4, cifar::kBytesPerImage) == 603);
    // ResNet32 DER over ten tasks, as used for the 23.5 MB endpoint.
    CHECK(cifar::kTasks * cifar::resnet(32).total() == 4635040);
}
