// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sdsim/bus.hpp"
#include "sdsim/protocol.hpp"

namespace sdsim::card {

inline constexpr std::size_t kBlockSize = 512;

enum class CardState : std::uint8_t {
    Idle = 0,
    Ready = 1,
    Ident = 2,
    Standby = 3,
    Transfer = 4,
    SendingData = 5,
    ReceiveData = 6,
    Programming = 7,
};

const char* to_string(CardState state) noexcept;

/// Card status bits as reported in R1.
namespace status {
inline constexpr std::uint32_t kOutOfRange = 1u << 31;
inline constexpr std::uint32_t kAddressError = 1u << 30;
inline constexpr std::uint32_t kBlockLenError = 1u << 29;
inline constexpr std::uint32_t kWpViolation = 1u << 26;
inline constexpr std::uint32_t kComCrcError = 1u << 23;
inline constexpr std::uint32_t kIllegalCommand = 1u << 22;
inline constexpr std::uint32_t kError = 1u << 19;
inline constexpr std::uint32_t kReadyForData = 1u << 8;
inline constexpr std::uint32_t kAppCmd = 1u << 5;
inline constexpr std::uint32_t kErrorMask = kOutOfRange | kAddressError | kBlockLenError |
                                            kWpViolation | kComCrcError | kIllegalCommand |
                                            kError;

constexpr std::uint32_t current_state(std::uint32_t r1) noexcept { return (r1 >> 9) & 0xf; }
} // namespace status

namespace ocr {
inline constexpr std::uint32_t kPowerUpDone = 1u << 31;
inline constexpr std::uint32_t kHighCapacity = 1u << 30;
inline constexpr std::uint32_t kVoltageWindow = 0x00ff8000;
} // namespace ocr

/// 128-bit register, words[3] most significant.
using Reg128 = std::array<std::uint32_t, 4>;

std::uint32_t get_bits(const Reg128& reg, unsigned hi, unsigned lo) noexcept;
void set_bits(Reg128& reg, unsigned hi, unsigned lo, std::uint32_t value) noexcept;

/// Capacity in 512 B blocks described by a version 2.0 CSD.
std::uint64_t csd_capacity_blocks(const Reg128& csd) noexcept;

struct CardRegisters {
    std::uint32_t ocr = ocr::kVoltageWindow;
    Reg128 cid{};
    Reg128 csd{};
    std::uint16_t rca = 0;
    std::uint64_t scr = 0;
    unsigned bus_width = 1;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Whole-block storage. File-backed images are loaded into memory and
/// written back by flush() and on destruction.
class CardImage {
public:
    static CardImage in_memory(std::size_t capacity_blocks);
    /// Capacity is derived from the file size, which must be a non-zero
    /// multiple of 512.
    static CardImage open_file(const std::filesystem::path& path, bool read_only = false);
    static CardImage create_file(const std::filesystem::path& path, std::size_t capacity_blocks);

    CardImage(CardImage&& other) noexcept;
    CardImage& operator=(CardImage&& other) noexcept;
    CardImage(const CardImage&) = delete;
    CardImage& operator=(const CardImage&) = delete;
    ~CardImage();

    std::size_t capacity_blocks() const noexcept { return m_data.size() / kBlockSize; }
    bool read_only() const noexcept { return m_read_only; }
    void set_read_only(bool ro) noexcept { m_read_only = ro; }
    bool dirty() const noexcept { return m_dirty; }
    bool file_backed() const noexcept { return m_path.has_value(); }

    std::span<const std::uint8_t, kBlockSize> block(std::size_t lba) const;
    void store(std::size_t lba, std::span<const std::uint8_t, kBlockSize> data);

    std::span<const std::uint8_t> bytes() const noexcept { return m_data; }
    std::uint32_t content_hash() const noexcept;

    void flush();

private:
    CardImage() = default;

    std::vector<std::uint8_t> m_data;
    std::optional<std::filesystem::path> m_path;
    bool m_read_only = false;
    bool m_dirty = false;
};

struct CardConfig {
    /// Clocks between command end bit and response start bit.
    unsigned ncr = 8;
    /// Clocks between response end bit (or previous block end) and data.
    unsigned nac = 8;
    /// DAT0 busy clocks after each written block.
    unsigned program_busy = 16;
    /// Number of ACMD41 polls answered with the power-up bit clear.
    unsigned acmd41_busy_polls = 2;
    bool never_ready = false;
    unsigned init_clocks = 74;
};

enum class DataActivityKind : std::uint8_t { None, Send, Receive };

struct DataActivity {
    DataActivityKind kind = DataActivityKind::None;
    std::uint64_t lba = 0;
    bool multi = false;
    /// SD clocks from now until the first data start bit (Send only).
    std::uint64_t start_delay = 0;
};

struct CommandResult {
    std::optional<protocol::Response> response;
    DataActivity data;
};

enum class BlockStatus : std::uint8_t { Ok, AddressError, WriteProtected };

enum class CardEventKind : std::uint8_t {
    CommandReceived,
    CommandRejected,
    ResponseStart,
    ResponseEnd,
    DataStart,
    DataEnd,
    CrcStatus,
    BusyEnd,
};

const char* to_string(CardEventKind kind) noexcept;

struct CardEvent {
    std::uint64_t clock = 0;
    CardEventKind kind{};
    std::uint64_t value = 0;
};

/// SDHC card: identification and data transfer state machine, registers,
/// and a bit-level CMD/DAT interface stepped one SD clock at a time.
class Card {
public:
    explicit Card(CardImage image, CardConfig config = {});

    /// Executes a decoded command, performs the state transition and queues
    /// the response and any DAT activity on the bus.
    CommandResult handle_command(const protocol::CommandFrame& cmd);

    /// Lines the card drives during the current clock.
    BusLines drive() const noexcept;
    /// One rising SD clock edge; `line` is the resolved bus level.
    void clock(BusLines line, std::vector<CardEvent>* events = nullptr);
    /// Advance by `sd_clocks` edges with the host not driving the bus.
    std::vector<CardEvent> tick(std::uint64_t sd_clocks);

    std::optional<protocol::DataBlock> read_block(std::uint64_t lba);
    BlockStatus write_block(std::uint64_t lba, std::span<const std::uint8_t> data);

    void set_powered(bool on);
    bool powered() const noexcept { return m_powered; }

    CardState state() const noexcept { return m_state; }
    const CardRegisters& registers() const noexcept { return m_regs; }
    std::uint32_t card_status() const noexcept { return m_status; }
    const CardImage& image() const noexcept { return m_image; }
    CardImage& image() noexcept { return m_image; }
    const CardConfig& config() const noexcept { return m_config; }
    bool write_protected() const noexcept { return m_image.read_only(); }

    std::uint64_t clocks() const noexcept { return m_clock; }
    bool busy() const noexcept;
    std::uint64_t blocks_sent() const noexcept { return m_blocks_sent; }
    std::uint64_t blocks_written() const noexcept { return m_blocks_written; }

private:
    enum class DatRx : std::uint8_t { Idle, Data, Crc, End };
    enum class DatPhase : std::uint8_t { None, ReadBlock, WriteAck };

    void reset_to_idle();
    void build_registers();
    std::uint32_t r1_status(bool app_cmd) const noexcept;
    protocol::Response make_r1(std::uint8_t index, protocol::ResponseKind kind, bool app_cmd = false);
    void reject(std::uint32_t bit);
    void queue_response(const protocol::Response& rsp);
    void queue_read_block(std::uint64_t delay);
    void on_dat_tx_done(std::vector<CardEvent>* events);
    void on_block_received(std::vector<CardEvent>* events);
    void receive_command_bit(bool bit, std::vector<CardEvent>* events);
    void receive_data_nibble(std::uint8_t nibble, std::vector<CardEvent>* events);
    void emit(std::vector<CardEvent>* events, CardEventKind kind, std::uint64_t value = 0) const;

    CardImage m_image;
    CardConfig m_config;
    CardRegisters m_regs;
    CardState m_state = CardState::Idle;
    std::uint32_t m_status = 0;
    std::uint32_t m_serial = 0;
    std::uint16_t m_next_rca = 0;
    bool m_expect_acmd = false;
    unsigned m_acmd41_polls = 0;
    bool m_powered = true;

    std::uint64_t m_clock = 0;
    std::uint64_t m_clocks_powered = 0;

    // CMD line receiver and transmitter
    std::array<std::uint8_t, 6> m_cmd_rx{};
    unsigned m_cmd_rx_bits = 0;
    std::vector<bool> m_cmd_tx;
    std::size_t m_cmd_tx_pos = 0;
    std::size_t m_cmd_tx_frame_start = 0;

    // DAT transmitter (read data, CRC status tokens, busy)
    std::vector<std::uint8_t> m_dat_tx;
    std::size_t m_dat_tx_pos = 0;
    std::size_t m_dat_tx_block_start = std::numeric_limits<std::size_t>::max();
    DatPhase m_dat_phase = DatPhase::None;
    std::uint64_t m_data_lba = 0;
    bool m_data_multi = false;
    bool m_stop_after_busy = false;

    // DAT receiver (write data)
    DatRx m_dat_rx = DatRx::Idle;
    std::vector<std::uint8_t> m_rx_bytes;
    unsigned m_rx_count = 0;
    protocol::LaneCrc m_rx_crc;
    std::array<std::uint16_t, protocol::kDataLanes> m_rx_sent_crc{};

    std::uint64_t m_blocks_sent = 0;
    std::uint64_t m_blocks_written = 0;
};

} // namespace sdsim::card
