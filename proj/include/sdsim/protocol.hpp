// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

/// SD bus framing: CRC7/CRC16, 48-bit command frames, response frames and
/// 4-bit wide data blocks. Everything on the wire is MSB first.
namespace sdsim::protocol {

/// A sequence of bits, one element per bit, in wire order.
using BitSeq = std::vector<bool>;

inline constexpr std::size_t kCommandBits = 48;
inline constexpr std::size_t kShortResponseBits = 48;
inline constexpr std::size_t kLongResponseBits = 136;
inline constexpr std::size_t kDefaultBlockSize = 512;
inline constexpr std::size_t kDataLanes = 4;

// -- CRC ---------------------------------------------------------------------

/// Bit-serial CRC7, polynomial x^7 + x^3 + 1, initial value 0.
class Crc7 {
public:
    void push(bool bit) noexcept {
        const bool fb = (((m_reg >> 6) & 1u) != 0) != bit;
        m_reg = static_cast<std::uint8_t>((m_reg << 1) & 0x7f);
        if (fb)
            m_reg ^= 0x09;
    }

    void push_byte(std::uint8_t byte) noexcept {
        for (int i = 7; i >= 0; --i)
            push(((byte >> i) & 1u) != 0);
    }

    std::uint8_t value() const noexcept { return m_reg; }

private:
    std::uint8_t m_reg = 0;
};

/// Bit-serial CRC16-CCITT, polynomial x^16 + x^12 + x^5 + 1, initial value 0.
class Crc16 {
public:
    void push(bool bit) noexcept {
        const bool fb = (((m_reg >> 15) & 1u) != 0) != bit;
        m_reg = static_cast<std::uint16_t>(m_reg << 1);
        if (fb)
            m_reg ^= 0x1021;
    }

    std::uint16_t value() const noexcept { return m_reg; }

private:
    std::uint16_t m_reg = 0;
};

std::uint8_t crc7(const BitSeq& bits);
/// CRC7 over the first `bit_count` bits of `bytes` (MSB first).
std::uint8_t crc7(std::span<const std::uint8_t> bytes, std::size_t bit_count);
std::uint8_t crc7(std::span<const std::uint8_t> bytes);

std::uint16_t crc16(const BitSeq& bits);
std::uint16_t crc16(std::span<const std::uint8_t> bytes, std::size_t bit_count);
/// Byte-aligned input; uses a table-driven fast path.
std::uint16_t crc16(std::span<const std::uint8_t> bytes);

// -- Command frames ----------------------------------------------------------

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Start or transmission bit has the wrong value.
class FramingError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

/// CRC7 (or the end bit that shares its byte) does not match.
class CrcError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

struct CommandFrame {
    std::uint8_t index = 0;
    std::uint32_t argument = 0;
    std::uint8_t crc = 0;

    /// Wire image: start, transmission, index, argument, crc7, end.
    std::array<std::uint8_t, 6> serialize() const noexcept;

    bool operator==(const CommandFrame&) const = default;
};

/// Throws std::domain_error if `index` > 63.
CommandFrame encode_command(unsigned index, std::uint32_t argument);

struct DecodedCommand {
    std::uint8_t index = 0;
    std::uint32_t argument = 0;

    bool operator==(const DecodedCommand&) const = default;
};

/// Throws FramingError or CrcError.
DecodedCommand decode_command(std::span<const std::uint8_t, 6> wire);

// -- Responses ---------------------------------------------------------------

enum class ResponseKind : std::uint8_t { None, R1, R1b, R2, R3, R6, R7 };

const char* to_string(ResponseKind kind) noexcept;

/// Number of bits on the CMD line, 0 for ResponseKind::None.
std::size_t response_bits(ResponseKind kind) noexcept;

struct Response {
    ResponseKind kind = ResponseKind::None;
    /// Echoed command index (ignored for R2/R3, which carry 0b111111).
    std::uint8_t index = 0;
    /// R1/R1b/R3/R6/R7 use words[0]. R2 holds the full 128-bit register,
    /// words[3] being the most significant, CRC7 and end bit in bits 7:0.
    std::array<std::uint32_t, 4> words{};
    bool busy = false;

    std::uint32_t payload() const noexcept { return words[0]; }

    bool operator==(const Response&) const = default;
};

/// Wire image with CRC7 attached (6 or 17 bytes). R3 gets an all-ones
/// CRC field. Empty for ResponseKind::None.
std::vector<std::uint8_t> serialize_response(const Response& rsp);

/// Inverse of serialize_response; does no CRC validation.
Response decode_response(std::span<const std::uint8_t> wire, ResponseKind kind);

/// Compute the CRC7 byte (crc << 1 | end bit) expected at the tail of a
/// 48-bit response, or the 128-bit R2 register's last byte.
std::uint8_t expected_response_trailer(std::span<const std::uint8_t> wire, ResponseKind kind);

// -- Data blocks -------------------------------------------------------------

/// One per-lane view of a block in 4-bit mode. Lane i carries bits
/// (7 - i) and (3 - i) of every byte, i.e. lane i travels on DAT(3 - i).
struct LaneStreams {
    std::array<BitSeq, kDataLanes> lanes;
    std::array<std::uint16_t, kDataLanes> crcs{};
};

struct DataBlock {
    std::vector<std::uint8_t> bytes;
    std::array<std::uint16_t, kDataLanes> lane_crcs{};

    bool operator==(const DataBlock&) const = default;
};

LaneStreams split_block_into_lanes(std::span<const std::uint8_t> block);
std::vector<std::uint8_t> merge_lanes(const LaneStreams& streams);

DataBlock make_block(std::span<const std::uint8_t> bytes);

/// Per-lane CRC16 accumulator fed one DAT nibble per SD clock.
class LaneCrc {
public:
    void push_nibble(std::uint8_t nibble) noexcept {
        for (std::size_t i = 0; i < kDataLanes; ++i)
            m_crc[i].push(((nibble >> (3 - i)) & 1u) != 0);
    }

    std::array<std::uint16_t, kDataLanes> values() const noexcept {
        return {m_crc[0].value(), m_crc[1].value(), m_crc[2].value(), m_crc[3].value()};
    }

private:
    std::array<Crc16, kDataLanes> m_crc{};
};

/// Nibble for CRC clock `bit` (0..15) given the four lane CRCs.
std::uint8_t crc_nibble(const std::array<std::uint16_t, kDataLanes>& crcs, unsigned bit) noexcept;

/// Full DAT-line image of one block: start nibble 0x0, two nibbles per
/// byte (high first), 16 CRC nibbles and end nibble 0xF.
std::vector<std::uint8_t> serialize_block_nibbles(const DataBlock& block);

/// Clocks one 4-bit block occupies on the DAT lines.
constexpr std::size_t block_clocks(std::size_t block_size) noexcept {
    return 1 + 2 * block_size + 16 + 1;
}

} // namespace sdsim::protocol
