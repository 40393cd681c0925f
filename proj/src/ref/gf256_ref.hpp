#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

// Reference arithmetic used by tests and benchmarks. Deliberately table-free
// and written against the field definition directly so it can act as an
// independent check on the production path. Keep it slow and obvious.
namespace qcs::ref {

// Carry-less shift-and-reduce multiply over 0x11D.
uint8_t mul(uint8_t a, uint8_t b);

// Exhaustive-search inverse: the unique x with mul(a, x) == 1.
// Returns 0 for a == 0.
uint8_t inv(uint8_t a);

// out[r] = sum_j coeffs[r][j] * sources[j], plain row-by-row matrix product.
// All source rows must share one length; each coeff row must have
// sources.size() entries.
std::vector<std::vector<uint8_t>> encode_naive(
    const std::vector<std::vector<uint8_t>>& sources,
    const std::vector<std::vector<uint8_t>>& coeffs);

// One-shot dense Gaussian elimination solving C * X = D for X.
// Takes exactly k independent rows; returns the k recovered source rows.
// Returns an empty vector when the rows are singular.
std::vector<std::vector<uint8_t>> solve_dense(
    std::vector<std::vector<uint8_t>> coeffs,
    std::vector<std::vector<uint8_t>> data);

// Rank of a coefficient matrix, via the same elimination.
size_t rank(std::vector<std::vector<uint8_t>> coeffs);

} // namespace qcs::ref
