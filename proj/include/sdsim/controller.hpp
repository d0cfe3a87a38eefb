// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include "sdsim/bus.hpp"
#include "sdsim/card.hpp"
#include "sdsim/protocol.hpp"
#include "sdsim/trace.hpp"

namespace sdsim::host {

/// SDHCI 1.00 register offsets.
namespace reg {
inline constexpr unsigned kSdmaAddress = 0x00;
inline constexpr unsigned kBlockSize = 0x04;
inline constexpr unsigned kBlockCount = 0x06;
inline constexpr unsigned kArgument = 0x08;
inline constexpr unsigned kTransferMode = 0x0c;
inline constexpr unsigned kCommand = 0x0e;
inline constexpr unsigned kResponse = 0x10;
inline constexpr unsigned kBufferDataPort = 0x20;
inline constexpr unsigned kPresentState = 0x24;
inline constexpr unsigned kHostControl = 0x28;
inline constexpr unsigned kPowerControl = 0x29;
inline constexpr unsigned kBlockGapControl = 0x2a;
inline constexpr unsigned kWakeupControl = 0x2b;
inline constexpr unsigned kClockControl = 0x2c;
inline constexpr unsigned kTimeoutControl = 0x2e;
inline constexpr unsigned kSoftwareReset = 0x2f;
inline constexpr unsigned kNormalIntStatus = 0x30;
inline constexpr unsigned kErrorIntStatus = 0x32;
inline constexpr unsigned kNormalIntStatusEnable = 0x34;
inline constexpr unsigned kErrorIntStatusEnable = 0x36;
inline constexpr unsigned kNormalIntSignalEnable = 0x38;
inline constexpr unsigned kErrorIntSignalEnable = 0x3a;
inline constexpr unsigned kAutoCmd12ErrorStatus = 0x3c;
inline constexpr unsigned kCapabilities = 0x40;
inline constexpr unsigned kMaxCurrentCapabilities = 0x48;
inline constexpr unsigned kSlotIntStatus = 0xfc;
inline constexpr unsigned kHostControllerVersion = 0xfe;
inline constexpr unsigned kSize = 0x100;
} // namespace reg

namespace tm {
inline constexpr std::uint16_t kDmaEnable = 1u << 0;
inline constexpr std::uint16_t kBlockCountEnable = 1u << 1;
inline constexpr std::uint16_t kAutoCmd12 = 1u << 2;
inline constexpr std::uint16_t kRead = 1u << 4;
inline constexpr std::uint16_t kMultiBlock = 1u << 5;
} // namespace tm

namespace cmdreg {
inline constexpr std::uint16_t kRespNone = 0b00;
inline constexpr std::uint16_t kResp136 = 0b01;
inline constexpr std::uint16_t kResp48 = 0b10;
inline constexpr std::uint16_t kResp48Busy = 0b11;
inline constexpr std::uint16_t kCrcCheck = 1u << 3;
inline constexpr std::uint16_t kIndexCheck = 1u << 4;
inline constexpr std::uint16_t kDataPresent = 1u << 5;

constexpr std::uint16_t make(unsigned index, std::uint16_t flags) noexcept {
    return static_cast<std::uint16_t>(((index & 0x3f) << 8) | flags);
}
} // namespace cmdreg

namespace present {
inline constexpr std::uint32_t kCmdInhibit = 1u << 0;
inline constexpr std::uint32_t kDatInhibit = 1u << 1;
inline constexpr std::uint32_t kDatLineActive = 1u << 2;
inline constexpr std::uint32_t kWriteTransferActive = 1u << 8;
inline constexpr std::uint32_t kReadTransferActive = 1u << 9;
inline constexpr std::uint32_t kBufferWriteEnable = 1u << 10;
inline constexpr std::uint32_t kBufferReadEnable = 1u << 11;
inline constexpr std::uint32_t kCardInserted = 1u << 16;
inline constexpr std::uint32_t kCardStateStable = 1u << 17;
inline constexpr std::uint32_t kCardDetectLevel = 1u << 18;
inline constexpr std::uint32_t kWriteEnabledLevel = 1u << 19;
} // namespace present

namespace irq {
inline constexpr std::uint16_t kCommandComplete = 1u << 0;
inline constexpr std::uint16_t kTransferComplete = 1u << 1;
inline constexpr std::uint16_t kBlockGapEvent = 1u << 2;
inline constexpr std::uint16_t kDmaInterrupt = 1u << 3;
inline constexpr std::uint16_t kBufferWriteReady = 1u << 4;
inline constexpr std::uint16_t kBufferReadReady = 1u << 5;
inline constexpr std::uint16_t kCardInsertion = 1u << 6;
inline constexpr std::uint16_t kCardRemoval = 1u << 7;
inline constexpr std::uint16_t kCardInterrupt = 1u << 8;
inline constexpr std::uint16_t kErrorInterrupt = 1u << 15;

inline constexpr std::uint16_t kCommandTimeout = 1u << 0;
inline constexpr std::uint16_t kCommandCrc = 1u << 1;
inline constexpr std::uint16_t kCommandEndBit = 1u << 2;
inline constexpr std::uint16_t kCommandIndex = 1u << 3;
inline constexpr std::uint16_t kDataTimeout = 1u << 4;
inline constexpr std::uint16_t kDataCrc = 1u << 5;
inline constexpr std::uint16_t kDataEndBit = 1u << 6;
inline constexpr std::uint16_t kCurrentLimit = 1u << 7;
inline constexpr std::uint16_t kAutoCmd12Error = 1u << 8;
} // namespace irq

namespace clk {
inline constexpr std::uint16_t kInternalEnable = 1u << 0;
inline constexpr std::uint16_t kInternalStable = 1u << 1;
inline constexpr std::uint16_t kSdClockEnable = 1u << 2;

/// Frequency select field: bits 15:8 plus upper bits 7:6.
constexpr std::uint16_t divisor_bits(unsigned n) noexcept {
    return static_cast<std::uint16_t>(((n & 0xff) << 8) | (((n >> 8) & 0x3) << 6));
}
} // namespace clk

inline constexpr std::uint16_t kHostControllerVersion = 0x0100;

class BusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ControllerConfig {
    double base_freq_hz = 50e6;
    /// System cycles from internal clock enable to internal clock stable.
    unsigned settle_cycles = 8;
    /// Read-side SRAM, in blocks.
    unsigned read_buffer_blocks = 2;
    /// Write-side staging SRAM, in blocks.
    unsigned write_buffer_blocks = 1;
    /// SD clocks without a response start bit before CommandTimeout.
    unsigned cmd_timeout_clocks = 64;
    /// SD clocks after a response-less command before CommandComplete.
    unsigned no_response_clocks = 8;
};

struct MmioCounters {
    std::uint64_t control_reads = 0;
    std::uint64_t control_writes = 0;
    std::uint64_t buffer_reads = 0;
    std::uint64_t buffer_writes = 0;

    std::uint64_t total() const noexcept {
        return control_reads + control_writes + buffer_reads + buffer_writes;
    }

    bool operator==(const MmioCounters&) const = default;
};

/// SDHCI 1.00 host controller with PIO data path: register file, command
/// engine, data engine with SD clock gating, and the SD clock divider.
/// Single-threaded; mmio_* and tick() run on the same simulated clock.
class Controller {
public:
    explicit Controller(card::Card& card, ControllerConfig config = {});

    /// Throws BusError on unaligned or out-of-range access.
    std::uint32_t mmio_read(unsigned offset, unsigned width);
    void mmio_write(unsigned offset, unsigned width, std::uint32_t value);

    /// Advances by `cycles` system clock cycles; returns the interrupt line.
    bool tick(std::uint64_t cycles);
    bool irq_line() const noexcept;

    std::uint64_t now() const noexcept { return m_now; }

    void set_trace(Trace* trace) noexcept { m_trace = trace; }

    const ControllerConfig& config() const noexcept { return m_config; }
    card::Card& card() noexcept { return m_card; }
    const MmioCounters& counters() const noexcept { return m_counters; }

    unsigned divisor() const noexcept;
    /// Effective SD clock frequency for the programmed divisor.
    double sd_clock_hz() const noexcept;
    bool sd_clock_running() const noexcept;

    std::size_t fill_level() const noexcept { return m_fifo.size(); }
    std::size_t buffer_capacity() const noexcept;
    bool gating_active() const noexcept { return m_gating; }
    std::uint64_t sd_edges() const noexcept { return m_sd_edges; }
    std::uint64_t gated_sd_clocks() const noexcept { return m_gated_clocks; }
    std::uint64_t empty_port_reads() const noexcept { return m_empty_port_reads; }
    /// Peak buffer fill since the current (or last) data transfer started.
    std::size_t max_fill_level() const noexcept { return m_max_fill; }

private:
    enum class CmdState : std::uint8_t { Idle, Sending, NoResponseWait, AwaitResponse, Receiving, BusyWait };
    enum class RxState : std::uint8_t { WaitStart, Data, Crc, End };
    enum class TxState : std::uint8_t { Idle, Start, Data, Crc, End, StatusWait, StatusBits, StatusEnd, Busy };

    struct ActiveCommand {
        std::uint8_t index = 0;
        std::uint32_t argument = 0;
        std::uint16_t flags = 0;
        bool auto_cmd12 = false;
    };

    void reset_all();
    void reset_cmd_line();
    void reset_dat_line();

    std::uint32_t read_dword(unsigned off4) const noexcept;
    void write_dword(unsigned off4, std::uint32_t value, std::uint32_t byte_mask);
    std::uint32_t port_read(unsigned width);
    void port_write(unsigned width, std::uint32_t value);

    std::uint32_t present_state() const noexcept;
    std::uint32_t capabilities() const noexcept;
    std::uint16_t normal_status() const noexcept;

    void raise_normal(std::uint16_t bits);
    void raise_error(std::uint16_t bits);
    void clear_status(std::uint16_t normal, std::uint16_t error);

    void issue_command();
    void start_command(const ActiveCommand& cmd);
    void finish_command(bool ok);

    void arm_data_engine();
    void open_read_block();
    void open_write_block();
    void check_transfer_complete();
    void abort_data(std::uint16_t error);
    std::uint64_t data_timeout_clocks() const noexcept;

    std::uint64_t period_cycles() const noexcept;
    void sd_edge();
    bool gate_condition() const noexcept;
    BusLines prepare_host_drive();
    void sample_cmd(BusLines line);
    void sample_read(BusLines line);
    void sample_write(BusLines line);

    void trace(TraceKind kind, std::string detail) {
        if (m_trace)
            m_trace->record(m_now, kind, std::move(detail));
    }

    card::Card& m_card;
    ControllerConfig m_config;
    Trace* m_trace = nullptr;
    MmioCounters m_counters;

    // Register state
    std::uint16_t m_block_size = 0;
    std::uint16_t m_block_count = 0;
    std::uint32_t m_argument = 0;
    std::uint16_t m_transfer_mode = 0;
    std::uint16_t m_command = 0;
    std::array<std::uint32_t, 4> m_response{};
    std::uint8_t m_host_control = 0;
    std::uint8_t m_power_control = 0;
    std::uint8_t m_block_gap_control = 0;
    std::uint8_t m_wakeup_control = 0;
    std::uint16_t m_clock_control = 0;
    std::uint8_t m_timeout_control = 0;
    std::uint16_t m_normal_status = 0;
    std::uint16_t m_error_status = 0;
    std::uint16_t m_normal_status_enable = 0;
    std::uint16_t m_error_status_enable = 0;
    std::uint16_t m_normal_signal_enable = 0;
    std::uint16_t m_error_signal_enable = 0;
    std::uint16_t m_acmd12_error = 0;

    // Clock
    std::uint64_t m_now = 0;
    std::uint64_t m_settle_remaining = 0;
    bool m_clock_stable = false;
    std::uint64_t m_phase = 0;
    std::uint64_t m_sd_edges = 0;
    std::uint64_t m_gated_clocks = 0;
    bool m_gating = false;

    // Command engine
    CmdState m_cmd_state = CmdState::Idle;
    ActiveCommand m_active;
    bool m_cmd_inhibit = false;
    bool m_dat_inhibit = false;
    std::array<std::uint8_t, 6> m_cmd_tx{};
    unsigned m_cmd_bit = 0;
    unsigned m_cmd_wait = 0;
    std::vector<std::uint8_t> m_rsp_rx;
    unsigned m_rsp_bits = 0;
    unsigned m_rsp_len = 0;
    bool m_auto12_pending = false;
    bool m_auto12_done = false;

    // Data engine
    bool m_data_active = false;
    bool m_data_read = false;
    bool m_data_failed = false;
    bool m_data_auto12 = false;
    bool m_cmd_done = false;
    bool m_write_open_pending = false;
    std::uint32_t m_blocks_total = 0;
    std::uint32_t m_blocks_done = 0;
    std::uint32_t m_blocks_ready = 0;   // read: complete blocks not yet opened by host
    std::uint32_t m_blocks_supplied = 0; // write: blocks written by host
    std::uint32_t m_blocks_queued = 0;   // write: complete blocks awaiting the DAT lines
    std::size_t m_cur_block_size = 0;
    std::size_t m_host_remaining = 0;
    bool m_bre = false;
    bool m_bwe = false;
    std::deque<std::uint8_t> m_fifo;
    std::size_t m_max_fill = 0;
    std::uint64_t m_empty_port_reads = 0;

    RxState m_rx = RxState::WaitStart;
    TxState m_tx = TxState::Idle;
    std::size_t m_nibble = 0;
    std::uint8_t m_rx_half = 0;
    std::uint64_t m_data_wait = 0;
    unsigned m_tx_gap = 0;
    protocol::LaneCrc m_lane_crc;
    std::array<std::uint16_t, protocol::kDataLanes> m_crc_latched{};
    std::uint8_t m_crc_status = 0;
};

} // namespace sdsim::host
