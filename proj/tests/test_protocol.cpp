// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "oracle.hpp"
#include "sdsim/protocol.hpp"

using namespace sdsim::protocol;

namespace {

std::vector<std::uint8_t> random_bytes(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::uint8_t> out(n);
    for (auto& b : out)
        b = static_cast<std::uint8_t>(rng());
    return out;
}

BitSeq to_bitseq(const std::vector<int>& bits) {
    return BitSeq(bits.begin(), bits.end());
}

} // namespace

// Reference values computed with the long-division oracle and frozen.
TEST(Crc7, KnownCommandValues) {
    const std::vector<std::uint8_t> cmd0 = {0x40, 0, 0, 0, 0};
    const std::vector<std::uint8_t> cmd8 = {0x48, 0, 0, 0x01, 0xaa};
    const std::vector<std::uint8_t> cmd17 = {0x51, 0, 0, 0, 0};
    ASSERT_EQ(oracle::crc7(oracle::bits_of(cmd0)), 0x4a);
    ASSERT_EQ(oracle::crc7(oracle::bits_of(cmd8)), 0x43);
    ASSERT_EQ(oracle::crc7(oracle::bits_of(cmd17)), 0x2a);

    EXPECT_EQ(crc7(cmd0), 0x4a);
    EXPECT_EQ(crc7(cmd8), 0x43);
    EXPECT_EQ(crc7(cmd17), 0x2a);
}

TEST(Crc7, EmptyInputIsZero) {
    EXPECT_EQ(crc7(BitSeq{}), 0);
    EXPECT_EQ(crc7(std::span<const std::uint8_t>{}), 0);
}

TEST(Crc16, KnownValues) {
    const std::vector<std::uint8_t> ff(512, 0xff);
    ASSERT_EQ(oracle::crc16(oracle::bits_of(ff)), 0x7fa1);
    EXPECT_EQ(crc16(ff), 0x7fa1);
    EXPECT_EQ(crc16(BitSeq(4096, true)), 0x7fa1);
    EXPECT_EQ(crc16(BitSeq{}), 0);
    EXPECT_EQ(crc16(std::span<const std::uint8_t>{}), 0);
}

TEST(Crc, MatchesOracleOnRandomBitStrings) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        const std::size_t nbits = rng() % 300;
        std::vector<int> bits(nbits);
        for (auto& b : bits)
            b = static_cast<int>(rng() & 1);
        const BitSeq seq = to_bitseq(bits);
        ASSERT_EQ(crc7(seq), oracle::crc7(bits)) << "length " << nbits;
        ASSERT_EQ(crc16(seq), oracle::crc16(bits)) << "length " << nbits;
    }
}

TEST(Crc16, TableDrivenPathMatchesBitSerial) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        const auto bytes = random_bytes(rng, rng() % 700);
        ASSERT_EQ(crc16(bytes), crc16(bytes, bytes.size() * 8));
        ASSERT_EQ(crc16(bytes), oracle::crc16(oracle::bits_of(bytes)));
    }
}

TEST(Crc, AppendingTheCrcYieldsZero) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 300; ++i) {
        const std::size_t nbits = 1 + rng() % 200;
        BitSeq seq(nbits);
        for (std::size_t k = 0; k < nbits; ++k)
            seq[k] = rng() & 1;

        BitSeq with7 = seq;
        const auto c7 = crc7(seq);
        for (int k = 6; k >= 0; --k)
            with7.push_back((c7 >> k) & 1);
        ASSERT_EQ(crc7(with7), 0);

        BitSeq with16 = seq;
        const auto c16 = crc16(seq);
        for (int k = 15; k >= 0; --k)
            with16.push_back((c16 >> k) & 1);
        ASSERT_EQ(crc16(with16), 0);
    }
}

TEST(Command, EncodesKnownFrames) {
    using Bytes = std::array<std::uint8_t, 6>;
    EXPECT_EQ(encode_command(0, 0).serialize(), (Bytes{0x40, 0x00, 0x00, 0x00, 0x00, 0x95}));
    EXPECT_EQ(encode_command(8, 0x1aa).serialize(), (Bytes{0x48, 0x00, 0x00, 0x01, 0xaa, 0x87}));
    EXPECT_EQ(encode_command(17, 0).serialize(), (Bytes{0x51, 0x00, 0x00, 0x00, 0x00, 0x55}));
}

TEST(Command, RejectsIndexOutOfRange) {
    EXPECT_THROW(encode_command(64, 0), std::domain_error);
    EXPECT_NO_THROW(encode_command(63, 0));
}

TEST(Command, DecodesKnownFrame) {
    const std::array<std::uint8_t, 6> wire = {0x40, 0, 0, 0, 0, 0x95};
    EXPECT_EQ(decode_command(wire), (DecodedCommand{0, 0}));
}

TEST(Command, CorruptEndBitIsCrcError) {
    const std::array<std::uint8_t, 6> wire = {0x40, 0, 0, 0, 0, 0x94};
    EXPECT_THROW(decode_command(wire), CrcError);
}

TEST(Command, BadStartOrTransmissionBitIsFramingError) {
    std::array<std::uint8_t, 6> wire = encode_command(17, 5).serialize();
    wire[0] |= 0x80;
    EXPECT_THROW(decode_command(wire), FramingError);
    wire = encode_command(17, 5).serialize();
    wire[0] &= ~0x40;
    EXPECT_THROW(decode_command(wire), FramingError);
}

TEST(Command, RoundTripsEveryIndex) {
    std::mt19937_64 rng(5);
    for (unsigned idx = 0; idx < 64; ++idx) {
        for (int k = 0; k < 16; ++k) {
            const auto arg = static_cast<std::uint32_t>(rng());
            const auto frame = encode_command(idx, arg);
            const auto wire = frame.serialize();
            EXPECT_EQ(decode_command(wire), (DecodedCommand{static_cast<std::uint8_t>(idx), arg}));
            EXPECT_EQ(frame.crc, oracle::crc7(oracle::bits_of({wire.begin(), wire.begin() + 5})));
        }
    }
}

TEST(Command, EverySingleBitFlipIsDetected) {
    const auto wire = encode_command(18, 0x12345678).serialize();
    for (unsigned bit = 0; bit < 48; ++bit) {
        auto bad = wire;
        bad[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
        EXPECT_THROW(decode_command(bad), ProtocolError) << "bit " << bit;
    }
}

TEST(Response, WireLengths) {
    EXPECT_EQ(response_bits(ResponseKind::None), 0u);
    EXPECT_EQ(response_bits(ResponseKind::R2), 136u);
    for (auto k : {ResponseKind::R1, ResponseKind::R1b, ResponseKind::R3, ResponseKind::R6, ResponseKind::R7})
        EXPECT_EQ(response_bits(k), 48u);
}

TEST(Response, ShortRoundTrip) {
    std::mt19937_64 rng(9);
    for (auto kind : {ResponseKind::R1, ResponseKind::R1b, ResponseKind::R3, ResponseKind::R6, ResponseKind::R7}) {
        Response rsp;
        rsp.kind = kind;
        rsp.index = kind == ResponseKind::R3 ? 0 : 17;
        rsp.words[0] = static_cast<std::uint32_t>(rng());
        rsp.busy = kind == ResponseKind::R1b;
        const auto wire = serialize_response(rsp);
        ASSERT_EQ(wire.size(), 6u);
        EXPECT_EQ(wire[0] & 0xc0, 0);
        EXPECT_EQ(wire[5] & 1, 1);
        const auto back = decode_response(wire, kind);
        EXPECT_EQ(back.words[0], rsp.words[0]);
        EXPECT_EQ(back.index, rsp.index);
        if (kind == ResponseKind::R3) {
            EXPECT_EQ(wire[0], 0x3f);
            EXPECT_EQ(wire[5], 0xff);
        }
        else {
            EXPECT_EQ(wire[5], expected_response_trailer(wire, kind));
        }
    }
}

TEST(Response, LongRoundTrip) {
    Response rsp;
    rsp.kind = ResponseKind::R2;
    rsp.words = {0x11223300, 0x44556677, 0x8899aabb, 0xccddeeff};
    const auto wire = serialize_response(rsp);
    ASSERT_EQ(wire.size(), 17u);
    EXPECT_EQ(wire[0], 0x3f);
    EXPECT_EQ(wire[16], expected_response_trailer(wire, ResponseKind::R2));
    const auto back = decode_response(wire, ResponseKind::R2);
    EXPECT_EQ(back.words[3], rsp.words[3]);
    EXPECT_EQ(back.words[1], rsp.words[1]);
    EXPECT_EQ(back.words[0] & 0xffffff00u, rsp.words[0]);
}

TEST(Response, NoneIsEmpty) {
    EXPECT_TRUE(serialize_response(Response{}).empty());
}

TEST(DataBlock, LaneStreamLengths) {
    const std::vector<std::uint8_t> block(512, 0x5a);
    const auto s = split_block_into_lanes(block);
    for (const auto& lane : s.lanes)
        EXPECT_EQ(lane.size(), 1024u);
    EXPECT_EQ(block_clocks(512), 1042u);
    EXPECT_EQ(serialize_block_nibbles(make_block(block)).size(), 1042u);
}

TEST(DataBlock, ZeroBlockHasZeroLaneCrcs) {
    const std::vector<std::uint8_t> block(512, 0);
    const auto s = split_block_into_lanes(block);
    for (auto c : s.crcs)
        EXPECT_EQ(c, 0);
}

TEST(DataBlock, AllOnesLaneCrc) {
    // Each lane of an all-0xFF block carries 1024 ones.
    ASSERT_EQ(oracle::crc16(std::vector<int>(1024, 1)), 0xeda9);
    const auto s = split_block_into_lanes(std::vector<std::uint8_t>(512, 0xff));
    for (auto c : s.crcs)
        EXPECT_EQ(c, 0xeda9);
}

TEST(DataBlock, LaneAssignment) {
    // 0x80 sets bit 7 only, which travels first on lane 0.
    std::vector<std::uint8_t> block(512, 0);
    block[0] = 0x80;
    block[1] = 0x01;
    const auto s = split_block_into_lanes(block);
    EXPECT_TRUE(s.lanes[0][0]);
    EXPECT_FALSE(s.lanes[1][0]);
    // Byte 1 bit 0 is the low nibble's last lane, second clock of that byte.
    EXPECT_TRUE(s.lanes[3][3]);
}

TEST(DataBlock, SplitMergeRoundTripAndOracleCrcs) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 50; ++i) {
        const auto bytes = random_bytes(rng, 512);
        const auto s = split_block_into_lanes(bytes);
        EXPECT_EQ(merge_lanes(s), bytes);
        for (std::size_t lane = 0; lane < kDataLanes; ++lane) {
            std::vector<int> bits(s.lanes[lane].begin(), s.lanes[lane].end());
            EXPECT_EQ(s.crcs[lane], oracle::crc16(bits));
        }
        const auto blk = make_block(bytes);
        EXPECT_EQ(blk.lane_crcs, s.crcs);
    }
}

TEST(DataBlock, NibbleSerialisationCarriesCrcs) {
    std::mt19937_64 rng(2);
    const auto bytes = random_bytes(rng, 512);
    const auto blk = make_block(bytes);
    const auto nib = serialize_block_nibbles(blk);
    EXPECT_EQ(nib.front(), 0x0);
    EXPECT_EQ(nib.back(), 0xf);
    LaneCrc crc;
    for (std::size_t i = 1; i <= 1024; ++i)
        crc.push_nibble(nib[i]);
    EXPECT_EQ(crc.values(), blk.lane_crcs);
    for (unsigned b = 0; b < 16; ++b)
        EXPECT_EQ(nib[1025 + b], crc_nibble(blk.lane_crcs, b));
}
