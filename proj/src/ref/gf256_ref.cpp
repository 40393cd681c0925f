#include "gf256_ref.hpp"

namespace qcs::ref {

uint8_t mul(uint8_t a, uint8_t b) {
    uint16_t acc = 0;
    uint16_t shifted = a;
    for (int bit = 0; bit < 8; ++bit) {
        if (b & (1u << bit))
            acc ^= static_cast<uint16_t>(shifted << bit);
    }
    // reduce the 15-bit product modulo x^8+x^4+x^3+x^2+1
    for (int bit = 14; bit >= 8; --bit) {
        if (acc & (1u << bit))
            acc ^= static_cast<uint16_t>(0x11D << (bit - 8));
    }
    return static_cast<uint8_t>(acc);
}

uint8_t inv(uint8_t a) {
    if (a == 0)
        return 0;
    for (int x = 1; x < 256; ++x) {
        if (mul(a, static_cast<uint8_t>(x)) == 1)
            return static_cast<uint8_t>(x);
    }
    return 0; // unreachable for a field
}

std::vector<std::vector<uint8_t>> encode_naive(
    const std::vector<std::vector<uint8_t>>& sources,
    const std::vector<std::vector<uint8_t>>& coeffs) {
    std::vector<std::vector<uint8_t>> out;
    out.reserve(coeffs.size());
    const size_t len = sources.empty() ? 0 : sources[0].size();
    for (const auto& row : coeffs) {
        std::vector<uint8_t> acc(len, 0);
        for (size_t j = 0; j < row.size(); ++j)
            for (size_t i = 0; i < len; ++i)
                acc[i] ^= mul(row[j], sources[j][i]);
        out.push_back(std::move(acc));
    }
    return out;
}

std::vector<std::vector<uint8_t>> solve_dense(
    std::vector<std::vector<uint8_t>> coeffs,
    std::vector<std::vector<uint8_t>> data) {
    const size_t k = coeffs.size();
    for (size_t col = 0; col < k; ++col) {
        size_t pivot = col;
        while (pivot < k && coeffs[pivot][col] == 0)
            ++pivot;
        if (pivot == k)
            return {};
        std::swap(coeffs[pivot], coeffs[col]);
        std::swap(data[pivot], data[col]);

        const uint8_t piv_inv = inv(coeffs[col][col]);
        for (auto& c : coeffs[col])
            c = mul(c, piv_inv);
        for (auto& d : data[col])
            d = mul(d, piv_inv);

        for (size_t r = 0; r < k; ++r) {
            if (r == col)
                continue;
            const uint8_t f = coeffs[r][col];
            if (f == 0)
                continue;
            for (size_t j = 0; j < k; ++j)
                coeffs[r][j] ^= mul(f, coeffs[col][j]);
            for (size_t j = 0; j < data[r].size(); ++j)
                data[r][j] ^= mul(f, data[col][j]);
        }
    }
    return data;
}

size_t rank(std::vector<std::vector<uint8_t>> coeffs) {
    if (coeffs.empty())
        return 0;
    const size_t cols = coeffs[0].size();
    size_t r = 0;
    for (size_t col = 0; col < cols && r < coeffs.size(); ++col) {
        size_t pivot = r;
        while (pivot < coeffs.size() && coeffs[pivot][col] == 0)
            ++pivot;
        if (pivot == coeffs.size())
            continue;
        std::swap(coeffs[pivot], coeffs[r]);
        const uint8_t piv_inv = inv(coeffs[r][col]);
        for (auto& c : coeffs[r])
            c = mul(c, piv_inv);
        for (size_t i = 0; i < coeffs.size(); ++i) {
            if (i == r)
                continue;
            const uint8_t f = coeffs[i][col];
            if (f == 0)
                continue;
            for (size_t j = 0; j < cols; ++j)
                coeffs[i][j] ^= mul(f, coeffs[r][j]);
        }
        ++r;
    }
    return r;
}

} // namespace qcs::ref
