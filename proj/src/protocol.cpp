// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdsim/protocol.hpp"

#include <string>

namespace sdsim::protocol {

namespace {

constexpr bool bit_at(std::span<const std::uint8_t> bytes, std::size_t i) {
    return ((bytes[i / 8] >> (7 - i % 8)) & 1u) != 0;
}

constexpr std::array<std::uint16_t, 256> make_crc16_table() {
    std::array<std::uint16_t, 256> table{};
    for (unsigned n = 0; n < 256; ++n) {
        std::uint16_t reg = static_cast<std::uint16_t>(n << 8);
        for (int k = 0; k < 8; ++k)
            reg = static_cast<std::uint16_t>((reg & 0x8000) ? (reg << 1) ^ 0x1021 : reg << 1);
        table[n] = reg;
    }
    return table;
}

constexpr auto kCrc16Table = make_crc16_table();

void check_bit_count(std::span<const std::uint8_t> bytes, std::size_t bit_count) {
    if (bit_count > bytes.size() * 8)
        throw std::out_of_range("bit count exceeds buffer");
}

} // namespace

std::uint8_t crc7(const BitSeq& bits) {
    Crc7 crc;
    for (bool b : bits)
        crc.push(b);
    return crc.value();
}

std::uint8_t crc7(std::span<const std::uint8_t> bytes, std::size_t bit_count) {
    check_bit_count(bytes, bit_count);
    Crc7 crc;
    for (std::size_t i = 0; i < bit_count; ++i)
        crc.push(bit_at(bytes, i));
    return crc.value();
}

std::uint8_t crc7(std::span<const std::uint8_t> bytes) {
    Crc7 crc;
    for (std::uint8_t b : bytes)
        crc.push_byte(b);
    return crc.value();
}

std::uint16_t crc16(const BitSeq& bits) {
    Crc16 crc;
    for (bool b : bits)
        crc.push(b);
    return crc.value();
}

std::uint16_t crc16(std::span<const std::uint8_t> bytes, std::size_t bit_count) {
    check_bit_count(bytes, bit_count);
    Crc16 crc;
    for (std::size_t i = 0; i < bit_count; ++i)
        crc.push(bit_at(bytes, i));
    return crc.value();
}

std::uint16_t crc16(std::span<const std::uint8_t> bytes) {
    std::uint16_t reg = 0;
    for (std::uint8_t b : bytes)
        reg = static_cast<std::uint16_t>((reg << 8) ^ kCrc16Table[((reg >> 8) ^ b) & 0xff]);
    return reg;
}

std::array<std::uint8_t, 6> CommandFrame::serialize() const noexcept {
    return {
        static_cast<std::uint8_t>(0x40 | (index & 0x3f)),
        static_cast<std::uint8_t>(argument >> 24),
        static_cast<std::uint8_t>(argument >> 16),
        static_cast<std::uint8_t>(argument >> 8),
        static_cast<std::uint8_t>(argument),
        static_cast<std::uint8_t>((crc << 1) | 1),
    };
}

CommandFrame encode_command(unsigned index, std::uint32_t argument) {
    if (index > 63)
        throw std::domain_error("command index out of range: " + std::to_string(index));

    CommandFrame frame{static_cast<std::uint8_t>(index), argument, 0};
    const auto wire = frame.serialize();
    frame.crc = crc7(std::span(wire).first(5));
    return frame;
}

DecodedCommand decode_command(std::span<const std::uint8_t, 6> wire) {
    if ((wire[0] & 0xc0) != 0x40)
        throw FramingError("bad start/transmission bits");

    const std::uint8_t trailer = static_cast<std::uint8_t>((crc7(wire.first(5)) << 1) | 1);
    if (wire[5] != trailer)
        throw CrcError("command crc7 mismatch");

    return {
        static_cast<std::uint8_t>(wire[0] & 0x3f),
        (std::uint32_t{wire[1]} << 24) | (std::uint32_t{wire[2]} << 16) |
            (std::uint32_t{wire[3]} << 8) | wire[4],
    };
}

const char* to_string(ResponseKind kind) noexcept {
    switch (kind) {
    case ResponseKind::None: return "none";
    case ResponseKind::R1: return "R1";
    case ResponseKind::R1b: return "R1b";
    case ResponseKind::R2: return "R2";
    case ResponseKind::R3: return "R3";
    case ResponseKind::R6: return "R6";
    case ResponseKind::R7: return "R7";
    }
    return "?";
}

std::size_t response_bits(ResponseKind kind) noexcept {
    switch (kind) {
    case ResponseKind::None: return 0;
    case ResponseKind::R2: return kLongResponseBits;
    default: return kShortResponseBits;
    }
}

std::vector<std::uint8_t> serialize_response(const Response& rsp) {
    std::vector<std::uint8_t> wire;
    switch (rsp.kind) {
    case ResponseKind::None:
        break;

    case ResponseKind::R2:
        wire.reserve(17);
        wire.push_back(0x3f);
        for (int w = 3; w >= 0; --w)
            for (int s = 24; s >= 0; s -= 8)
                wire.push_back(static_cast<std::uint8_t>(rsp.words[w] >> s));
        wire[16] = static_cast<std::uint8_t>((crc7(std::span(wire).subspan(1, 15)) << 1) | 1);
        break;

    default: {
        const std::uint32_t arg = rsp.words[0];
        const std::uint8_t head = rsp.kind == ResponseKind::R3 ? 0x3f : (rsp.index & 0x3f);
        wire = {head,
                static_cast<std::uint8_t>(arg >> 24),
                static_cast<std::uint8_t>(arg >> 16),
                static_cast<std::uint8_t>(arg >> 8),
                static_cast<std::uint8_t>(arg),
                0xff};
        if (rsp.kind != ResponseKind::R3)
            wire[5] = static_cast<std::uint8_t>((crc7(std::span(wire).first(5)) << 1) | 1);
        break;
    }
    }
    return wire;
}

Response decode_response(std::span<const std::uint8_t> wire, ResponseKind kind) {
    Response rsp;
    rsp.kind = kind;
    rsp.busy = kind == ResponseKind::R1b;
    if (wire.size() * 8 != response_bits(kind))
        throw FramingError("response length does not match kind");
    if (kind == ResponseKind::None)
        return rsp;
    if ((wire[0] & 0x80) != 0 || (wire[0] & 0x40) != 0 || (wire.back() & 1u) == 0)
        throw FramingError("bad response framing bits");

    if (kind == ResponseKind::R2) {
        for (int w = 3; w >= 0; --w) {
            const std::size_t base = 1 + static_cast<std::size_t>(3 - w) * 4;
            rsp.words[w] = (std::uint32_t{wire[base]} << 24) | (std::uint32_t{wire[base + 1]} << 16) |
                           (std::uint32_t{wire[base + 2]} << 8) | wire[base + 3];
        }
        return rsp;
    }

    rsp.index = kind == ResponseKind::R3 ? 0 : (wire[0] & 0x3f);
    rsp.words[0] = (std::uint32_t{wire[1]} << 24) | (std::uint32_t{wire[2]} << 16) |
                   (std::uint32_t{wire[3]} << 8) | wire[4];
    return rsp;
}

std::uint8_t expected_response_trailer(std::span<const std::uint8_t> wire, ResponseKind kind) {
    if (kind == ResponseKind::R2)
        return static_cast<std::uint8_t>((crc7(wire.subspan(1, 15)) << 1) | 1);
    if (kind == ResponseKind::R3)
        return 0xff;
    return static_cast<std::uint8_t>((crc7(wire.first(5)) << 1) | 1);
}

LaneStreams split_block_into_lanes(std::span<const std::uint8_t> block) {
    LaneStreams out;
    for (auto& lane : out.lanes)
        lane.reserve(block.size() * 2);

    for (std::uint8_t byte : block) {
        for (std::size_t i = 0; i < kDataLanes; ++i) {
            out.lanes[i].push_back(((byte >> (7 - i)) & 1u) != 0);
            out.lanes[i].push_back(((byte >> (3 - i)) & 1u) != 0);
        }
    }
    for (std::size_t i = 0; i < kDataLanes; ++i)
        out.crcs[i] = crc16(out.lanes[i]);
    return out;
}

std::vector<std::uint8_t> merge_lanes(const LaneStreams& streams) {
    const std::size_t n = streams.lanes[0].size() / 2;
    std::vector<std::uint8_t> bytes(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        std::uint8_t b = 0;
        for (std::size_t i = 0; i < kDataLanes; ++i) {
            if (streams.lanes[i][2 * k])
                b |= static_cast<std::uint8_t>(1u << (7 - i));
            if (streams.lanes[i][2 * k + 1])
                b |= static_cast<std::uint8_t>(1u << (3 - i));
        }
        bytes[k] = b;
    }
    return bytes;
}

DataBlock make_block(std::span<const std::uint8_t> bytes) {
    DataBlock block;
    block.bytes.assign(bytes.begin(), bytes.end());
    LaneCrc crc;
    for (std::uint8_t b : bytes) {
        crc.push_nibble(b >> 4);
        crc.push_nibble(b & 0x0f);
    }
    block.lane_crcs = crc.values();
    return block;
}

std::uint8_t crc_nibble(const std::array<std::uint16_t, kDataLanes>& crcs, unsigned bit) noexcept {
    std::uint8_t nibble = 0;
    for (std::size_t i = 0; i < kDataLanes; ++i)
        if ((crcs[i] >> (15 - bit)) & 1u)
            nibble |= static_cast<std::uint8_t>(1u << (3 - i));
    return nibble;
}

std::vector<std::uint8_t> serialize_block_nibbles(const DataBlock& block) {
    std::vector<std::uint8_t> out;
    out.reserve(block_clocks(block.bytes.size()));
    out.push_back(0x0);
    for (std::uint8_t b : block.bytes) {
        out.push_back(b >> 4);
        out.push_back(b & 0x0f);
    }
    for (unsigned bit = 0; bit < 16; ++bit)
        out.push_back(crc_nibble(block.lane_crcs, bit));
    out.push_back(0xf);
    return out;
}

} // namespace sdsim::protocol
