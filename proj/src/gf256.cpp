#include "qcs/gf256.hpp"

#include "qcs/errors.hpp"

namespace qcs::gf256 {
namespace {

struct Tables {
    uint8_t exp[512];      // exp[i] = 2^i, doubled so mul can skip the mod 255
    uint8_t log[256];      // log[0] unused
    uint8_t inverse[256];  // inverse[0] unused
    uint8_t product[256][256];

    Tables() {
        uint16_t x = 1;
        for (int i = 0; i < 255; ++i) {
            exp[i] = static_cast<uint8_t>(x);
            log[x] = static_cast<uint8_t>(i);
            x <<= 1;
            if (x & 0x100)
                x ^= kReductionPoly;
        }
        for (int i = 255; i < 512; ++i)
            exp[i] = exp[i - 255];
        log[0] = 0;
        inverse[0] = 0;
        for (int i = 1; i < 256; ++i)
            inverse[i] = exp[255 - log[i]];
        for (int a = 0; a < 256; ++a) {
            product[0][a] = 0;
            product[a][0] = 0;
        }
        for (int a = 1; a < 256; ++a)
            for (int b = 1; b < 256; ++b)
                product[a][b] = exp[log[a] + log[b]];
    }
};

const Tables& tables() {
    static const Tables t;
    return t;
}

} // namespace

uint8_t mul(uint8_t a, uint8_t b) noexcept {
    return tables().product[a][b];
}

uint8_t inv(uint8_t a) {
    if (a == 0)
        throw Error(Errc::division_by_zero, "gf256 inverse of zero");
    return tables().inverse[a];
}

uint8_t div(uint8_t a, uint8_t b) {
    if (b == 0)
        throw Error(Errc::division_by_zero, "gf256 divide by zero");
    if (a == 0)
        return 0;
    const Tables& t = tables();
    return t.exp[t.log[a] + 255 - t.log[b]];
}

void add_scaled(std::span<uint8_t> dst, std::span<const uint8_t> src, uint8_t c) {
    if (dst.size() != src.size())
        throw Error(Errc::length_mismatch, "add_scaled span sizes differ");
    if (c == 0)
        return;
    const uint8_t* row = tables().product[c];
    for (size_t i = 0; i < dst.size(); ++i)
        dst[i] ^= row[src[i]];
}

void scale(std::span<uint8_t> data, uint8_t c) noexcept {
    const uint8_t* row = tables().product[c];
    for (auto& v : data)
        v = row[v];
}

const uint8_t* mul_row(uint8_t c) noexcept {
    return tables().product[c];
}

} // namespace qcs::gf256
