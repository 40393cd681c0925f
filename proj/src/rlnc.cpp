#include "qcs/rlnc.hpp"

#include <algorithm>
#include <numeric>

#include "qcs/errors.hpp"
#include "qcs/gf256.hpp"

namespace qcs::rlnc {
namespace {

// Reduces v against a row-echelon basis; true iff v lies in its span.
// Basis rows have leading coefficient 1 at strictly increasing pivots.
bool in_span(const std::vector<std::vector<uint8_t>>& basis,
             const std::vector<size_t>& pivots, std::vector<uint8_t> v) {
    for (size_t r = 0; r < basis.size(); ++r) {
        const uint8_t f = v[pivots[r]];
        if (f != 0)
            gf256::add_scaled(v, basis[r], f);
    }
    return std::all_of(v.begin(), v.end(), [](uint8_t x) { return x == 0; });
}

// Echelon basis of a set of rows, built incrementally.
struct Basis {
    std::vector<std::vector<uint8_t>> rows;
    std::vector<size_t> pivots;

    // Returns false (and leaves the basis unchanged) for dependent rows.
    bool insert(std::vector<uint8_t> v) {
        for (size_t r = 0; r < rows.size(); ++r) {
            const uint8_t f = v[pivots[r]];
            if (f != 0)
                gf256::add_scaled(v, rows[r], f);
        }
        auto it = std::find_if(v.begin(), v.end(), [](uint8_t x) { return x != 0; });
        if (it == v.end())
            return false;
        const size_t pivot = static_cast<size_t>(it - v.begin());
        gf256::scale(v, gf256::inv(v[pivot]));
        rows.push_back(std::move(v));
        pivots.push_back(pivot);
        return true;
    }
};

// Advances pick to the next size-|pick| combination out of 0..n-1.
bool next_combination(std::vector<size_t>& pick, size_t n) {
    size_t i = pick.size();
    while (i > 0) {
        --i;
        if (pick[i] != i + n - pick.size()) {
            ++pick[i];
            for (size_t j = i + 1; j < pick.size(); ++j)
                pick[j] = pick[j - 1] + 1;
            return true;
        }
    }
    return false;
}

} // namespace

RlncGroup make_group(uint16_t group_id, std::span<const uint8_t> data, uint8_t k) {
    if (k < 1)
        throw Error(Errc::bad_param, "group needs k >= 1");
    if (data.empty())
        throw Error(Errc::bad_param, "group needs at least one byte");
    RlncGroup g;
    g.group_id = group_id;
    g.k = k;
    const size_t kk = k;
    g.chunk_len = (data.size() + kk - 1) / kk;
    g.source_chunks.reserve(kk);
    for (size_t i = 0; i < kk; ++i) {
        std::vector<uint8_t> chunk(g.chunk_len, 0);
        const size_t begin = i * g.chunk_len;
        if (begin < data.size()) {
            const size_t n = std::min(g.chunk_len, data.size() - begin);
            std::copy_n(data.begin() + static_cast<ptrdiff_t>(begin), n, chunk.begin());
        }
        g.source_chunks.push_back(std::move(chunk));
    }
    return g;
}

std::vector<std::vector<uint8_t>> combine(const std::vector<std::vector<uint8_t>>& sources,
                                          const std::vector<std::vector<uint8_t>>& coeffs,
                                          bool parallel) {
    const size_t len = sources.empty() ? 0 : sources[0].size();
    std::vector<std::vector<uint8_t>> out(coeffs.size());
    const int64_t n = static_cast<int64_t>(coeffs.size());
#pragma omp parallel for schedule(static) if (parallel && n > 2 && len >= 2048)
    for (int64_t r = 0; r < n; ++r) {
        std::vector<uint8_t> acc(len, 0);
        const auto& row = coeffs[static_cast<size_t>(r)];
        for (size_t j = 0; j < row.size(); ++j)
            gf256::add_scaled(acc, sources[j], row[j]);
        out[static_cast<size_t>(r)] = std::move(acc);
    }
    return out;
}

GroupEncoder::GroupEncoder(RlncGroup group, uint64_t seed)
    : group_(std::move(group)), rng_(seed) {
    if (group_.k < 1 || group_.source_chunks.size() != static_cast<size_t>(group_.k))
        throw Error(Errc::bad_param, "encoder group malformed");
    for (const auto& c : group_.source_chunks)
        if (c.size() != group_.chunk_len)
            throw Error(Errc::length_mismatch, "source chunk length mismatch");
}

size_t GroupEncoder::headroom() const {
    // C(n, k-1) capped at 301; past 300 constraints a draw is impractical.
    auto constraint_count = [this](size_t n) -> size_t {
        const size_t m = static_cast<size_t>(group_.k) - 1;
        if (m == 0 || n <= m)
            return 1;
        size_t c = 1;
        for (size_t i = 1; i <= m; ++i) {
            c = c * (n - m + i) / i; // exact: product of i consecutive ints
            if (c > 300)
                return 301;
        }
        return c;
    };
    size_t n = rows_.size();
    size_t extra = 0;
    while (extra < 1024 && constraint_count(n) <= 300) {
        ++n;
        ++extra;
    }
    return extra;
}

std::vector<uint8_t> GroupEncoder::draw_row() {
    const size_t k = group_.k;
    // A candidate is accepted iff it stays independent of every (k-1)-subset
    // of the rows emitted so far, which keeps every k-subset of the final
    // rows at full rank: that is what makes any (emitted - k) chunk losses
    // survivable. Rejection sampling converges quickly; dependent draws are
    // rare in GF(256) unless far more than k rows are requested.
    for (int attempt = 0; attempt < 100000; ++attempt) {
        std::vector<uint8_t> v(k);
        for (auto& c : v)
            c = static_cast<uint8_t>(rng_.next_below(256));
        if (std::all_of(v.begin(), v.end(), [](uint8_t x) { return x == 0; }))
            continue;

        bool ok = true;
        if (rows_.size() < k) {
            Basis b;
            for (const auto& r : rows_)
                b.insert(r);
            ok = !in_span(b.rows, b.pivots, v);
        } else {
            std::vector<size_t> pick(k - 1);
            std::iota(pick.begin(), pick.end(), size_t{0});
            do {
                Basis b;
                for (size_t idx : pick)
                    b.insert(rows_[idx]);
                if (in_span(b.rows, b.pivots, v)) {
                    ok = false;
                    break;
                }
            } while (next_combination(pick, rows_.size()));
        }
        if (ok)
            return v;
    }
    throw Error(Errc::invariant_violation, "could not draw an independent coefficient row");
}

std::vector<CodedChunk> GroupEncoder::emit(size_t count) {
    std::vector<std::vector<uint8_t>> fresh;
    fresh.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        fresh.push_back(draw_row());
        rows_.push_back(fresh.back());
    }
    auto data = combine(group_.source_chunks, fresh);
    std::vector<CodedChunk> out(count);
    for (size_t i = 0; i < count; ++i)
        out[i] = CodedChunk{std::move(fresh[i]), std::move(data[i])};
    return out;
}

std::vector<CodedChunk> rlnc_encode(const RlncGroup& group, size_t k_prime, uint64_t rng_seed) {
    if (k_prime < group.k)
        throw Error(Errc::bad_param, "k_prime below group size");
    GroupEncoder enc(group, rng_seed);
    return enc.emit(k_prime);
}

std::vector<QualitativePacket> pack_group(uint16_t group_id, uint8_t k,
                                          const std::vector<CodedChunk>& coded, size_t h,
                                          const PackPolicy& policy) {
    if (h < 1)
        throw Error(Errc::bad_param, "h must be >= 1");
    if (coded.empty())
        throw Error(Errc::bad_param, "no coded chunks to pack");
    if (k < 1)
        throw Error(Errc::bad_param, "k must be >= 1");

    std::vector<QualitativePacket> packets;
    packets.reserve((coded.size() + h - 1) / h);
    for (size_t begin = 0; begin < coded.size(); begin += h) {
        const size_t n = std::min(h, coded.size() - begin);
        QualitativePacket p;
        p.coded = true;
        p.tos = policy.tos;
        p.k = k;
        p.group_id = group_id;
        p.directive.q_function = QFunction::coded_random;
        p.directive.q_threshold = policy.q_threshold;
        p.directive.condition_param = policy.condition_param;
        p.directive.deadline_us = policy.deadline_us;
        uint16_t offset = 0;
        for (size_t i = 0; i < n; ++i) {
            const CodedChunk& c = coded[begin + i];
            if (c.coeffs.size() != static_cast<size_t>(k))
                throw Error(Errc::length_mismatch, "coded chunk coefficient count");
            if (c.data.empty() || c.data.size() > 0xFFFF)
                throw Error(Errc::bad_param, "coded chunk length unusable");
            ChunkDescriptor d;
            d.sig = 0; // significance unused under coded-random
            d.offset = offset;
            d.length = static_cast<uint16_t>(c.data.size());
            d.crc16 = wire::crc16(c.data);
            d.coeffs = c.coeffs;
            p.descriptors.push_back(std::move(d));
            p.payload.insert(p.payload.end(), c.data.begin(), c.data.end());
            offset = static_cast<uint16_t>(offset + c.data.size());
        }
        wire::validate(p);
        packets.push_back(std::move(p));
    }
    return packets;
}

DecoderState::DecoderState(uint8_t k, size_t chunk_len) : k_(k), len_(chunk_len) {
    if (k < 1)
        throw Error(Errc::bad_param, "decoder needs k >= 1");
    if (chunk_len < 1)
        throw Error(Errc::bad_param, "decoder needs chunk_len >= 1");
}

DecoderState::AddResult DecoderState::add(const CodedChunk& chunk) {
    if (chunk.coeffs.size() != static_cast<size_t>(k_))
        throw Error(Errc::length_mismatch, "coefficient vector length != k");
    if (chunk.data.size() != len_)
        throw Error(Errc::length_mismatch, "chunk data length mismatch");

    std::vector<uint8_t> c = chunk.coeffs;
    std::vector<uint8_t> d = chunk.data;
    for (size_t r = 0; r < coeffs_.size(); ++r) {
        const uint8_t f = c[pivots_[r]];
        if (f != 0) {
            gf256::add_scaled(c, coeffs_[r], f);
            gf256::add_scaled(d, data_[r], f);
        }
    }
    auto it = std::find_if(c.begin(), c.end(), [](uint8_t x) { return x != 0; });
    if (it == c.end())
        return {rank(), false}; // dependent: absorbed, no new information

    const size_t pivot = static_cast<size_t>(it - c.begin());
    const uint8_t piv_inv = gf256::inv(c[pivot]);
    gf256::scale(c, piv_inv);
    gf256::scale(d, piv_inv);

    // back-eliminate the new pivot from existing rows to stay in RREF
    for (size_t r = 0; r < coeffs_.size(); ++r) {
        const uint8_t f = coeffs_[r][pivot];
        if (f != 0) {
            gf256::add_scaled(coeffs_[r], c, f);
            gf256::add_scaled(data_[r], d, f);
        }
    }

    // insert keeping pivot columns sorted
    auto pos = std::lower_bound(pivots_.begin(), pivots_.end(), pivot);
    const size_t at = static_cast<size_t>(pos - pivots_.begin());
    pivots_.insert(pos, pivot);
    coeffs_.insert(coeffs_.begin() + static_cast<ptrdiff_t>(at), std::move(c));
    data_.insert(data_.begin() + static_cast<ptrdiff_t>(at), std::move(d));
    return {rank(), true};
}

std::vector<std::vector<uint8_t>> DecoderState::solve() const {
    if (rank() < static_cast<size_t>(k_))
        throw Error(Errc::insufficient_rank, "need more degrees of freedom",
                    static_cast<int64_t>(rank()), static_cast<int64_t>(k_));
    // Full-rank RREF of a k x k system is the identity with rows sorted by
    // pivot, so the data rows are exactly the source chunks in order.
    return data_;
}

} // namespace qcs::rlnc
