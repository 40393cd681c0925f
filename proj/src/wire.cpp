#include "qcs/wire.hpp"

#include <array>

#include "qcs/errors.hpp"

namespace qcs {

const char* to_string(QFunction f) {
    switch (f) {
    case QFunction::priority_order: return "priority";
    case QFunction::binary:         return "binary";
    case QFunction::step:           return "step";
    case QFunction::coded_random:   return "coded-random";
    }
    return "?";
}

size_t QualitativePacket::surviving_count() const {
    size_t n = 0;
    for (const auto& d : descriptors)
        if (!d.dropped)
            ++n;
    return n;
}

size_t QualitativePacket::surviving_bytes() const {
    size_t n = 0;
    for (const auto& d : descriptors)
        if (!d.dropped)
            n += d.length;
    return n;
}

namespace wire {
namespace {

constexpr uint8_t kFlagWashed = 0x01;
constexpr uint8_t kFlagCoded = 0x02;
constexpr uint8_t kDescFlagDropped = 0x01;
constexpr size_t kMaxChunks = 64;

std::array<uint16_t, 256> make_crc_table() {
    std::array<uint16_t, 256> t{};
    for (uint16_t b = 0; b < 256; ++b) {
        uint16_t r = static_cast<uint16_t>(b << 8);
        for (int i = 0; i < 8; ++i)
            r = (r & 0x8000) ? static_cast<uint16_t>((r << 1) ^ 0x1021)
                             : static_cast<uint16_t>(r << 1);
        t[b] = r;
    }
    return t;
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

// Bounds-checked big-endian reader.
struct Cursor {
    std::span<const uint8_t> buf;
    size_t pos = 0;

    void need(size_t n) const {
        if (buf.size() - pos < n)
            throw Error(Errc::truncated, "need " + std::to_string(n) +
                                             " more bytes at offset " + std::to_string(pos));
    }
    uint8_t u8() {
        need(1);
        return buf[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(buf[pos] << 8 | buf[pos + 1]);
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = (static_cast<uint32_t>(buf[pos]) << 24) |
                     (static_cast<uint32_t>(buf[pos + 1]) << 16) |
                     (static_cast<uint32_t>(buf[pos + 2]) << 8) |
                     static_cast<uint32_t>(buf[pos + 3]);
        pos += 4;
        return v;
    }
    std::span<const uint8_t> bytes(size_t n) {
        need(n);
        auto s = buf.subspan(pos, n);
        pos += n;
        return s;
    }
    size_t remaining() const { return buf.size() - pos; }
};

[[noreturn]] void bad(const std::string& what) {
    throw Error(Errc::invariant_violation, what);
}

} // namespace

uint16_t crc16(std::span<const uint8_t> bytes) {
    static const auto table = make_crc_table();
    uint16_t crc = 0xFFFF;
    for (uint8_t b : bytes)
        crc = static_cast<uint16_t>((crc << 8) ^ table[(crc >> 8) ^ b]);
    return crc;
}

void validate(const QualitativePacket& p, Errc crc_errc) {
    if (p.version != kVersion)
        bad("version must be 1");
    if (p.tos > 7)
        bad("tos exceeds 3 bits");
    const auto& d = p.directive;
    if (d.command != kCommandWash)
        bad("unknown directive command");
    if (d.condition_code != kConditionQueueOccupancyGe)
        bad("unknown condition code");
    if (d.condition_param > 100)
        bad("condition_param over 100");
    if (static_cast<uint8_t>(d.q_function) > 3)
        bad("unknown q_function");
    if (d.q_threshold < 1)
        bad("q_threshold must be >= 1");
    if (p.descriptors.empty() || p.descriptors.size() > kMaxChunks)
        bad("chunk_count out of 1..64");
    if (p.coded) {
        if (p.k < 1)
            bad("coded packet with k = 0");
        if (d.q_function != QFunction::coded_random)
            bad("coded packet requires coded-random q_function");
    } else {
        if (p.k != 0)
            bad("uncoded packet with nonzero k");
        if (p.group_id != 0)
            bad("uncoded packet with nonzero group_id");
    }

    size_t running = 0;
    size_t survivors = 0;
    for (size_t i = 0; i < p.descriptors.size(); ++i) {
        const auto& c = p.descriptors[i];
        if (c.coeffs.size() != static_cast<size_t>(p.coded ? p.k : 0))
            bad("descriptor " + std::to_string(i) + " coefficient count");
        if (c.length < 1)
            bad("descriptor " + std::to_string(i) + " zero length");
        if (c.dropped) {
            if (c.offset != kDroppedOffset)
                bad("dropped descriptor " + std::to_string(i) + " offset not 0xFFFF");
            continue;
        }
        ++survivors;
        if (c.offset != running)
            bad("descriptor " + std::to_string(i) + " offset not contiguous");
        running += c.length;
        if (running > 0xFFFF)
            bad("payload exceeds 16-bit offsets");
    }
    if (survivors == 0)
        bad("no surviving chunks");
    if (p.payload.size() != running)
        bad("payload length does not match surviving descriptors");

    for (size_t i = 0; i < p.descriptors.size(); ++i) {
        const auto& c = p.descriptors[i];
        if (c.dropped)
            continue;
        auto body = std::span<const uint8_t>(p.payload).subspan(c.offset, c.length);
        if (crc16(body) != c.crc16)
            throw Error(crc_errc, "chunk " + std::to_string(i) + " crc mismatch",
                        static_cast<int64_t>(i));
    }
}

size_t encoded_size(const QualitativePacket& p) {
    const size_t header = kFixedHeaderBytes + (p.coded ? 3 : 0);
    const size_t desc = kDescriptorBytes + (p.coded ? p.k : 0);
    return header + p.descriptors.size() * desc + p.payload.size();
}

std::vector<uint8_t> encode(const QualitativePacket& p) {
    validate(p);
    std::vector<uint8_t> out;
    out.reserve(encoded_size(p));

    put_u16(out, kMagic);
    out.push_back(p.version);
    uint8_t flags = 0;
    if (p.washed)
        flags |= kFlagWashed;
    if (p.coded)
        flags |= kFlagCoded;
    out.push_back(flags);
    out.push_back(p.tos);
    out.push_back(p.directive.command);
    out.push_back(p.directive.condition_code);
    out.push_back(p.directive.condition_param);
    out.push_back(static_cast<uint8_t>(p.directive.q_function));
    put_u16(out, p.directive.q_threshold);
    put_u32(out, p.directive.deadline_us);
    out.push_back(static_cast<uint8_t>(p.descriptors.size()));
    if (p.coded) {
        out.push_back(p.k);
        put_u16(out, p.group_id);
    }
    for (const auto& c : p.descriptors) {
        out.push_back(c.sig);
        out.push_back(c.dropped ? kDescFlagDropped : 0);
        put_u16(out, c.offset);
        put_u16(out, c.length);
        put_u16(out, c.crc16);
        out.insert(out.end(), c.coeffs.begin(), c.coeffs.end());
    }
    out.insert(out.end(), p.payload.begin(), p.payload.end());
    return out;
}

QualitativePacket decode(std::span<const uint8_t> bytes) {
    Cursor in{bytes};
    if (in.u16() != kMagic)
        throw Error(Errc::bad_magic, "not a qualitative packet");
    QualitativePacket p;
    p.version = in.u8();
    if (p.version != kVersion)
        throw Error(Errc::bad_version, "unsupported version " + std::to_string(p.version));
    const uint8_t flags = in.u8();
    if (flags & ~(kFlagWashed | kFlagCoded))
        bad("unknown flag bits");
    p.washed = flags & kFlagWashed;
    p.coded = flags & kFlagCoded;
    p.tos = in.u8();
    p.directive.command = in.u8();
    p.directive.condition_code = in.u8();
    p.directive.condition_param = in.u8();
    p.directive.q_function = static_cast<QFunction>(in.u8());
    p.directive.q_threshold = in.u16();
    p.directive.deadline_us = in.u32();
    const uint8_t chunk_count = in.u8();
    if (p.coded) {
        p.k = in.u8();
        p.group_id = in.u16();
    }
    if (chunk_count < 1 || chunk_count > kMaxChunks)
        bad("chunk_count out of 1..64");

    const size_t coeff_len = p.coded ? p.k : 0;
    size_t payload_len = 0;
    p.descriptors.resize(chunk_count);
    for (auto& c : p.descriptors) {
        c.sig = in.u8();
        const uint8_t dflags = in.u8();
        if (dflags & ~kDescFlagDropped)
            bad("unknown descriptor flag bits");
        c.dropped = dflags & kDescFlagDropped;
        c.offset = in.u16();
        c.length = in.u16();
        c.crc16 = in.u16();
        auto co = in.bytes(coeff_len);
        c.coeffs.assign(co.begin(), co.end());
        if (!c.dropped)
            payload_len += c.length;
    }
    auto body = in.bytes(payload_len);
    p.payload.assign(body.begin(), body.end());
    if (in.remaining() != 0)
        bad("trailing bytes after payload");

    validate(p, Errc::chunk_crc_mismatch);
    return p;
}

std::span<const uint8_t> chunk_bytes(const QualitativePacket& p, size_t i) {
    const auto& c = p.descriptors.at(i);
    if (c.dropped)
        return {};
    return std::span<const uint8_t>(p.payload).subspan(c.offset, c.length);
}

std::vector<bool> survivor_crc_ok(const QualitativePacket& p) {
    std::vector<bool> ok(p.descriptors.size(), true);
    for (size_t i = 0; i < p.descriptors.size(); ++i) {
        const auto& c = p.descriptors[i];
        if (c.dropped)
            continue;
        if (c.offset + static_cast<size_t>(c.length) > p.payload.size()) {
            ok[i] = false;
            continue;
        }
        ok[i] = crc16(chunk_bytes(p, i)) == c.crc16;
    }
    return ok;
}

double header_overhead(size_t num_chunks, size_t mtu, OverheadModel model) {
    if (num_chunks < 1)
        throw Error(Errc::bad_param, "need at least one chunk");
    if (mtu < 64)
        throw Error(Errc::bad_param, "mtu below 64");
    switch (model) {
    case OverheadModel::four_byte_descriptors:
        return 4.0 * static_cast<double>(num_chunks) / static_cast<double>(mtu);
    case OverheadModel::wire_layout:
        return static_cast<double>(kFixedHeaderBytes + kDescriptorBytes * num_chunks) /
               static_cast<double>(mtu);
    }
    throw Error(Errc::bad_param, "unknown overhead model");
}

} // namespace wire
} // namespace qcs
