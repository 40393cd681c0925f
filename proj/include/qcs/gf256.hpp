#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace qcs::gf256 {

// GF(2^8) with reduction polynomial x^8+x^4+x^3+x^2+1 (0x11D), generator 2.
inline constexpr uint16_t kReductionPoly = 0x11D;

inline uint8_t add(uint8_t a, uint8_t b) noexcept { return a ^ b; }
inline uint8_t sub(uint8_t a, uint8_t b) noexcept { return a ^ b; }

// Table-driven multiply / inverse. inv(0) and div-by-zero throw.
uint8_t mul(uint8_t a, uint8_t b) noexcept;
uint8_t inv(uint8_t a);
uint8_t div(uint8_t a, uint8_t b);

// dst ^= c * src, elementwise. Sizes must match.
void add_scaled(std::span<uint8_t> dst, std::span<const uint8_t> src, uint8_t c);

// data *= c, elementwise.
void scale(std::span<uint8_t> data, uint8_t c) noexcept;

// Row of the 256x256 product table for a fixed factor; lets hot loops skip
// the per-element table lookup arithmetic.
const uint8_t* mul_row(uint8_t c) noexcept;

} // namespace qcs::gf256
