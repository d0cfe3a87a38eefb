// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdsim/controller.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "format.hpp"

namespace sdsim::host {

using protocol::ResponseKind;

namespace {

constexpr std::uint16_t kClockWritable = 0xffc5;
constexpr std::uint16_t kStatusEnableMask = 0x01ff;

std::string irq_names(std::uint16_t normal, std::uint16_t error) {
    static constexpr const char* kNormal[] = {"CommandComplete", "TransferComplete", "BlockGap",
                                              "Dma", "BufferWriteReady", "BufferReadReady",
                                              "CardInsertion", "CardRemoval", "CardInterrupt"};
    static constexpr const char* kError[] = {"CommandTimeout", "CommandCrc", "CommandEndBit",
                                             "CommandIndex", "DataTimeout", "DataCrc",
                                             "DataEndBit", "CurrentLimit", "AutoCmd12"};
    std::string out;
    for (unsigned i = 0; i < 9; ++i) {
        if (normal & (1u << i))
            out += std::string(out.empty() ? "" : ",") + kNormal[i];
        if (error & (1u << i))
            out += std::string(out.empty() ? "" : ",") + kError[i];
    }
    return out;
}

ResponseKind kind_of(std::uint16_t flags) noexcept {
    switch (flags & 3) {
    case cmdreg::kResp136: return ResponseKind::R2;
    case cmdreg::kResp48: return ResponseKind::R1;
    case cmdreg::kResp48Busy: return ResponseKind::R1b;
    default: return ResponseKind::None;
    }
}

} // namespace

Controller::Controller(card::Card& card, ControllerConfig config) : m_card(card), m_config(config) {
    reset_all();
}

// -- Reset -------------------------------------------------------------------

void Controller::reset_all() {
    m_block_size = 0;
    m_block_count = 0;
    m_argument = 0;
    m_transfer_mode = 0;
    m_command = 0;
    m_response = {};
    m_host_control = 0;
    m_power_control = 0;
    m_block_gap_control = 0;
    m_wakeup_control = 0;
    m_clock_control = 0;
    m_timeout_control = 0;
    m_normal_status = 0;
    m_error_status = 0;
    m_normal_status_enable = 0;
    m_error_status_enable = 0;
    m_normal_signal_enable = 0;
    m_error_signal_enable = 0;
    m_acmd12_error = 0;

    m_settle_remaining = 0;
    m_clock_stable = false;
    m_phase = 0;
    m_gating = false;

    reset_cmd_line();
    reset_dat_line();
    m_card.set_powered(false);
}

void Controller::reset_cmd_line() {
    m_cmd_state = CmdState::Idle;
    m_cmd_inhibit = false;
    m_auto12_pending = false;
}

void Controller::reset_dat_line() {
    m_write_open_pending = false;
    m_data_active = false;
    m_data_failed = false;
    m_data_auto12 = false;
    m_cmd_done = false;
    m_dat_inhibit = false;
    m_fifo.clear();
    m_bre = false;
    m_bwe = false;
    m_host_remaining = 0;
    m_blocks_total = m_blocks_done = m_blocks_ready = m_blocks_supplied = m_blocks_queued = 0;
    m_rx = RxState::WaitStart;
    m_tx = TxState::Idle;
    m_auto12_pending = false;
    m_auto12_done = false;
    if (m_cmd_state == CmdState::BusyWait)
        m_cmd_state = CmdState::Idle;
}

// -- MMIO --------------------------------------------------------------------

std::uint32_t Controller::mmio_read(unsigned offset, unsigned width) {
    if ((width != 1 && width != 2 && width != 4) || offset % width != 0 || offset + width > reg::kSize)
        throw BusError(strprintf("bad mmio read at 0x%02x width %u", offset, width));

    std::uint32_t value = 0;
    if ((offset & ~3u) == reg::kBufferDataPort) {
        ++m_counters.buffer_reads;
        value = port_read(width);
    } else {
        ++m_counters.control_reads;
        const std::uint32_t dword = read_dword(offset & ~3u);
        const std::uint32_t mask = width == 4 ? 0xffffffffu : ((1u << (8 * width)) - 1);
        value = (dword >> (8 * (offset & 3))) & mask;
    }
    if (m_trace)
        trace(TraceKind::MmioRead, strprintf("off=0x%02x w=%u v=0x%08x", offset, width, value));
    return value;
}

void Controller::mmio_write(unsigned offset, unsigned width, std::uint32_t value) {
    if ((width != 1 && width != 2 && width != 4) || offset % width != 0 || offset + width > reg::kSize)
        throw BusError(strprintf("bad mmio write at 0x%02x width %u", offset, width));

    if (width < 4)
        value &= (1u << (8 * width)) - 1;
    if (m_trace)
        trace(TraceKind::MmioWrite, strprintf("off=0x%02x w=%u v=0x%08x", offset, width, value));

    if ((offset & ~3u) == reg::kBufferDataPort) {
        ++m_counters.buffer_writes;
        port_write(width, value);
        return;
    }
    ++m_counters.control_writes;
    const unsigned shift = 8 * (offset & 3);
    const std::uint32_t byte_mask = ((1u << width) - 1) << (offset & 3);
    write_dword(offset & ~3u, value << shift, byte_mask);
}

std::uint32_t Controller::read_dword(unsigned off4) const noexcept {
    switch (off4) {
    case 0x04: return m_block_size | (std::uint32_t{m_block_count} << 16);
    case 0x08: return m_argument;
    case 0x0c: return m_transfer_mode | (std::uint32_t{m_command} << 16);
    case 0x10: return m_response[0];
    case 0x14: return m_response[1];
    case 0x18: return m_response[2];
    case 0x1c: return m_response[3];
    case 0x24: return present_state();
    case 0x28:
        return m_host_control | (std::uint32_t{m_power_control} << 8) |
               (std::uint32_t{m_block_gap_control} << 16) | (std::uint32_t{m_wakeup_control} << 24);
    case 0x2c: {
        std::uint32_t cc = m_clock_control;
        if (m_clock_stable)
            cc |= clk::kInternalStable;
        return cc | (std::uint32_t{m_timeout_control} << 16);
    }
    case 0x30: return normal_status() | (std::uint32_t{m_error_status} << 16);
    case 0x34: return m_normal_status_enable | (std::uint32_t{m_error_status_enable} << 16);
    case 0x38: return m_normal_signal_enable | (std::uint32_t{m_error_signal_enable} << 16);
    case 0x3c: return m_acmd12_error;
    case 0x40: return capabilities();
    case 0xfc: return (irq_line() ? 1u : 0u) | (std::uint32_t{kHostControllerVersion} << 16);
    default: return 0;
    }
}

void Controller::write_dword(unsigned off4, std::uint32_t v, std::uint32_t be) {
    auto merge16 = [](std::uint16_t old, std::uint32_t value, std::uint32_t lanes, std::uint16_t mask) {
        std::uint16_t out = old;
        if (lanes & 1)
            out = static_cast<std::uint16_t>((out & 0xff00) | (value & 0x00ff));
        if (lanes & 2)
            out = static_cast<std::uint16_t>((out & 0x00ff) | (value & 0xff00));
        return static_cast<std::uint16_t>(out & mask);
    };
    const std::uint32_t lo = be & 3;
    const std::uint32_t hi = (be >> 2) & 3;

    switch (off4) {
    case 0x04:
        m_block_size = merge16(m_block_size, v, lo, 0x7fff);
        m_block_count = merge16(m_block_count, v >> 16, hi, 0xffff);
        return;

    case 0x08:
        for (unsigned i = 0; i < 4; ++i)
            if (be & (1u << i))
                m_argument = (m_argument & ~(0xffu << (8 * i))) | (v & (0xffu << (8 * i)));
        return;

    case 0x0c:
        if (lo && !m_dat_inhibit)
            m_transfer_mode = merge16(m_transfer_mode, v, lo, 0x0037);
        if (hi) {
            m_command = merge16(m_command, v >> 16, hi, 0x3ffb);
            if (hi & 2)
                issue_command();
        }
        return;

    case 0x28:
        if (be & 1)
            m_host_control = static_cast<std::uint8_t>(v & 0x07);
        if (be & 2) {
            m_power_control = static_cast<std::uint8_t>((v >> 8) & 0x0f);
            m_card.set_powered((m_power_control & 1) != 0);
        }
        if (be & 4)
            m_block_gap_control = static_cast<std::uint8_t>((v >> 16) & 0x0f);
        if (be & 8)
            m_wakeup_control = static_cast<std::uint8_t>((v >> 24) & 0x07);
        return;

    case 0x2c: {
        if (lo) {
            const std::uint16_t old = m_clock_control;
            const std::uint16_t now = merge16(old, v, lo, kClockWritable);
            m_clock_control = now;
            if (!(now & clk::kInternalEnable)) {
                m_clock_stable = false;
                m_settle_remaining = 0;
            } else if (!(old & clk::kInternalEnable)) {
                m_clock_stable = m_config.settle_cycles == 0;
                m_settle_remaining = m_config.settle_cycles;
            }
            if ((old & 0xffc0) != (now & 0xffc0))
                m_phase = 0;
        }
        if (be & 4)
            m_timeout_control = static_cast<std::uint8_t>((v >> 16) & 0x0f);
        if (be & 8) {
            const std::uint8_t rst = static_cast<std::uint8_t>(v >> 24);
            if (rst & 1) {
                reset_all();
            } else {
                if (rst & 2)
                    reset_cmd_line();
                if (rst & 4)
                    reset_dat_line();
            }
        }
        return;
    }

    case 0x30: {
        const std::uint16_t normal = static_cast<std::uint16_t>((lo & 1 ? v & 0xff : 0) | (lo & 2 ? v & 0x7f00 : 0));
        const std::uint32_t e = v >> 16;
        const std::uint16_t error = static_cast<std::uint16_t>((hi & 1 ? e & 0xff : 0) | (hi & 2 ? e & 0xff00 : 0));
        clear_status(normal, error);
        return;
    }

    case 0x34:
        m_normal_status_enable = merge16(m_normal_status_enable, v, lo, kStatusEnableMask);
        m_error_status_enable = merge16(m_error_status_enable, v >> 16, hi, kStatusEnableMask);
        return;

    case 0x38:
        m_normal_signal_enable = merge16(m_normal_signal_enable, v, lo, kStatusEnableMask);
        m_error_signal_enable = merge16(m_error_signal_enable, v >> 16, hi, kStatusEnableMask);
        return;

    default:
        return; // read-only or reserved
    }
}

std::uint32_t Controller::port_read(unsigned width) {
    if (!m_bre || m_host_remaining == 0) {
        ++m_empty_port_reads;
        trace(TraceKind::Misuse, "read from empty buffer data port");
        return 0;
    }
    std::uint32_t value = 0;
    for (unsigned i = 0; i < width && m_host_remaining > 0; ++i, --m_host_remaining) {
        value |= std::uint32_t{m_fifo.front()} << (8 * i);
        m_fifo.pop_front();
    }
    if (m_host_remaining == 0) {
        m_bre = false;
        open_read_block();
        check_transfer_complete();
    }
    return value;
}

void Controller::port_write(unsigned width, std::uint32_t value) {
    if (!m_bwe || m_host_remaining == 0) {
        trace(TraceKind::Misuse, "write to buffer data port without space");
        return;
    }
    for (unsigned i = 0; i < width && m_host_remaining > 0; ++i, --m_host_remaining)
        m_fifo.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    m_max_fill = std::max(m_max_fill, m_fifo.size());
    if (m_host_remaining == 0) {
        m_bwe = false;
        ++m_blocks_supplied;
        ++m_blocks_queued;
        open_write_block();
    }
}

std::uint32_t Controller::present_state() const noexcept {
    std::uint32_t ps = present::kCardInserted | present::kCardStateStable | present::kCardDetectLevel;
    if (m_cmd_inhibit)
        ps |= present::kCmdInhibit;
    if (m_dat_inhibit)
        ps |= present::kDatInhibit;
    if (m_data_active) {
        ps |= present::kDatLineActive;
        ps |= m_data_read ? present::kReadTransferActive : present::kWriteTransferActive;
    }
    if (m_bwe)
        ps |= present::kBufferWriteEnable;
    if (m_bre)
        ps |= present::kBufferReadEnable;
    if (!m_card.write_protected())
        ps |= present::kWriteEnabledLevel;
    return ps;
}

std::uint32_t Controller::capabilities() const noexcept {
    const auto mhz = static_cast<std::uint32_t>(m_config.base_freq_hz / 1e6);
    const std::uint32_t field = mhz <= 63 ? mhz : 0;
    return field              // timeout clock frequency
           | (1u << 7)        // timeout clock unit: MHz
           | (field << 8)     // base clock frequency for SD clock
           | (0u << 16)       // max block length 512
           | (1u << 24);      // 3.3 V
}

std::uint16_t Controller::normal_status() const noexcept {
    return static_cast<std::uint16_t>(m_normal_status | (m_error_status ? irq::kErrorInterrupt : 0));
}

bool Controller::irq_line() const noexcept {
    return (normal_status() & m_normal_signal_enable & 0x7fff) != 0 ||
           (m_error_status & m_error_signal_enable) != 0;
}

void Controller::raise_normal(std::uint16_t bits) {
    bits &= m_normal_status_enable;
    const std::uint16_t fresh = bits & ~m_normal_status;
    m_normal_status |= bits;
    if (fresh)
        trace(TraceKind::IrqRaise, irq_names(fresh, 0));
}

void Controller::raise_error(std::uint16_t bits) {
    bits &= m_error_status_enable;
    const std::uint16_t fresh = bits & ~m_error_status;
    m_error_status |= bits;
    if (fresh)
        trace(TraceKind::IrqRaise, irq_names(0, fresh));
}

void Controller::clear_status(std::uint16_t normal, std::uint16_t error) {
    const std::uint16_t n = m_normal_status & normal;
    const std::uint16_t e = m_error_status & error;
    m_normal_status &= ~n;
    m_error_status &= ~e;
    if (n || e)
        trace(TraceKind::IrqClear, irq_names(n, e));
}

// -- Clock -------------------------------------------------------------------

unsigned Controller::divisor() const noexcept {
    return ((m_clock_control >> 8) & 0xff) | (((m_clock_control >> 6) & 0x3) << 8);
}

double Controller::sd_clock_hz() const noexcept {
    const unsigned n = divisor();
    return n == 0 ? m_config.base_freq_hz : m_config.base_freq_hz / (2.0 * n);
}

std::uint64_t Controller::period_cycles() const noexcept {
    const unsigned n = divisor();
    return n == 0 ? 1 : 2ull * n;
}

bool Controller::sd_clock_running() const noexcept {
    return (m_clock_control & clk::kInternalEnable) && m_clock_stable &&
           (m_clock_control & clk::kSdClockEnable);
}

std::size_t Controller::buffer_capacity() const noexcept {
    const std::size_t bs = m_cur_block_size ? m_cur_block_size : card::kBlockSize;
    return bs * (m_data_read ? m_config.read_buffer_blocks : m_config.write_buffer_blocks);
}

bool Controller::tick(std::uint64_t cycles) {
    std::uint64_t remaining = cycles;
    while (remaining > 0) {
        std::uint64_t step = remaining;
        if (m_settle_remaining > 0)
            step = std::min(step, m_settle_remaining);
        const bool running = sd_clock_running();
        const std::uint64_t period = period_cycles();
        if (running)
            step = std::min(step, period - m_phase);

        m_now += step;
        remaining -= step;
        if (m_settle_remaining > 0) {
            m_settle_remaining -= step;
            if (m_settle_remaining == 0)
                m_clock_stable = true;
        }
        if (running) {
            m_phase += step;
            if (m_phase >= period) {
                m_phase = 0;
                sd_edge();
            }
        }
    }
    return irq_line();
}

// -- Command engine ----------------------------------------------------------

void Controller::issue_command() {
    if (m_cmd_inhibit) {
        trace(TraceKind::Misuse, "command write while command inhibit set");
        return;
    }
    const std::uint16_t flags = m_command & 0xff;
    const bool data = (flags & cmdreg::kDataPresent) != 0;
    if (data && m_dat_inhibit) {
        trace(TraceKind::Misuse, "data command write while data inhibit set");
        return;
    }

    m_active = {static_cast<std::uint8_t>((m_command >> 8) & 0x3f), m_argument, flags, false};
    m_cmd_inhibit = true;
    if (data || (flags & 3) == cmdreg::kResp48Busy)
        m_dat_inhibit = true;
    if (data)
        arm_data_engine();
    start_command(m_active);
}

void Controller::start_command(const ActiveCommand& cmd) {
    m_active = cmd;
    m_cmd_tx = protocol::encode_command(cmd.index, cmd.argument).serialize();
    m_cmd_bit = 0;
    m_cmd_wait = 0;
    m_cmd_state = CmdState::Sending;
    trace(TraceKind::Command, strprintf("CMD%u arg=0x%08x%s", cmd.index, cmd.argument,
                                        cmd.auto_cmd12 ? " auto" : ""));
}

void Controller::finish_command(bool ok) {
    const bool busy = (m_active.flags & 3) == cmdreg::kResp48Busy;

    if (m_active.auto_cmd12) {
        if (!ok) {
            m_cmd_state = CmdState::Idle;
            m_data_failed = true;
            return;
        }
        if (busy) {
            m_cmd_state = CmdState::BusyWait;
            return;
        }
        m_cmd_state = CmdState::Idle;
        m_auto12_done = true;
        check_transfer_complete();
        return;
    }

    m_cmd_inhibit = false;
    const bool data = (m_active.flags & cmdreg::kDataPresent) != 0;
    if (!ok) {
        m_cmd_state = CmdState::Idle;
        if (data) {
            m_data_active = false;
            m_bre = m_bwe = false;
        }
        return;
    }

    raise_normal(irq::kCommandComplete);
    if (data) {
        m_cmd_done = true;
        m_tx_gap = 0;
        m_write_open_pending = !m_data_read;
        check_transfer_complete();
    }
    if (busy) {
        m_cmd_state = CmdState::BusyWait;
        return;
    }
    m_cmd_state = CmdState::Idle;
}

void Controller::sample_cmd(BusLines line) {
    switch (m_cmd_state) {
    case CmdState::Idle:
        return;

    case CmdState::Sending: {
        if (++m_cmd_bit < protocol::kCommandBits)
            return;
        const ResponseKind kind = kind_of(m_active.flags);
        m_cmd_wait = 0;
        if (kind == ResponseKind::None) {
            m_cmd_state = CmdState::NoResponseWait;
            return;
        }
        m_rsp_len = static_cast<unsigned>(protocol::response_bits(kind));
        m_rsp_rx.assign(m_rsp_len / 8, 0);
        m_rsp_bits = 0;
        m_cmd_state = CmdState::AwaitResponse;
        return;
    }

    case CmdState::NoResponseWait:
        if (++m_cmd_wait >= m_config.no_response_clocks)
            finish_command(true);
        return;

    case CmdState::AwaitResponse:
        if (line.cmd) {
            if (++m_cmd_wait > m_config.cmd_timeout_clocks) {
                trace(TraceKind::Error, strprintf("CMD%u response timeout", m_active.index));
                if (m_active.auto_cmd12) {
                    m_acmd12_error |= 1u << 1;
                    raise_error(irq::kAutoCmd12Error);
                } else {
                    raise_error(irq::kCommandTimeout);
                }
                finish_command(false);
            }
            return;
        }
        m_cmd_state = CmdState::Receiving;
        m_rsp_bits = 1; // start bit, already zero
        return;

    case CmdState::Receiving: {
        if (line.cmd)
            m_rsp_rx[m_rsp_bits / 8] |= static_cast<std::uint8_t>(0x80u >> (m_rsp_bits % 8));
        if (++m_rsp_bits < m_rsp_len)
            return;

        const ResponseKind kind = kind_of(m_active.flags);
        std::uint16_t errors = 0;
        if ((m_rsp_rx.back() & 1) == 0)
            errors |= irq::kCommandEndBit;
        if (m_active.flags & cmdreg::kCrcCheck) {
            const std::uint8_t expected = protocol::expected_response_trailer(m_rsp_rx, kind);
            if ((m_rsp_rx.back() >> 1) != (expected >> 1))
                errors |= irq::kCommandCrc;
        }
        if ((m_active.flags & cmdreg::kIndexCheck) && (m_rsp_rx[0] & 0x3f) != m_active.index)
            errors |= irq::kCommandIndex;

        const auto rsp = protocol::decode_response(m_rsp_rx, kind == ResponseKind::R2 ? kind : ResponseKind::R1);
        if (m_active.auto_cmd12) {
            m_response[3] = rsp.words[0];
        } else if (kind == ResponseKind::R2) {
            const auto& w = rsp.words;
            m_response[0] = (w[0] >> 8) | (w[1] << 24);
            m_response[1] = (w[1] >> 8) | (w[2] << 24);
            m_response[2] = (w[2] >> 8) | (w[3] << 24);
            m_response[3] = w[3] >> 8;
        } else {
            m_response[0] = rsp.words[0];
        }
        trace(TraceKind::Response, strprintf("CMD%u %s 0x%08x%s", m_active.index,
                                             protocol::to_string(kind), rsp.words[0],
                                             errors ? " error" : ""));

        if (errors) {
            if (m_active.auto_cmd12) {
                if (errors & irq::kCommandCrc)
                    m_acmd12_error |= 1u << 2;
                if (errors & irq::kCommandEndBit)
                    m_acmd12_error |= 1u << 3;
                if (errors & irq::kCommandIndex)
                    m_acmd12_error |= 1u << 4;
                raise_error(irq::kAutoCmd12Error);
            } else {
                raise_error(errors);
            }
            finish_command(false);
            return;
        }
        finish_command(true);
        return;
    }

    case CmdState::BusyWait:
        if ((line.dat & 1) == 0)
            return;
        m_cmd_state = CmdState::Idle;
        if (m_active.auto_cmd12) {
            m_auto12_done = true;
            check_transfer_complete();
        } else if (!(m_active.flags & cmdreg::kDataPresent) && !m_data_active) {
            m_dat_inhibit = false;
            raise_normal(irq::kTransferComplete);
        }
        return;
    }
}

// -- Data engine -------------------------------------------------------------

void Controller::arm_data_engine() {
    const bool multi = (m_transfer_mode & tm::kMultiBlock) != 0;
    m_data_active = true;
    m_data_failed = false;
    m_data_read = (m_transfer_mode & tm::kRead) != 0;
    m_data_auto12 = multi && (m_transfer_mode & tm::kAutoCmd12) != 0;
    m_blocks_total = multi ? m_block_count : 1;
    m_cur_block_size = m_block_size & 0x0fff;
    if (m_cur_block_size == 0)
        m_cur_block_size = card::kBlockSize;
    m_blocks_done = m_blocks_ready = m_blocks_supplied = m_blocks_queued = 0;
    m_host_remaining = 0;
    m_bre = m_bwe = false;
    m_fifo.clear();
    m_max_fill = 0;
    m_rx = RxState::WaitStart;
    m_tx = TxState::Idle;
    m_data_wait = 0;
    m_tx_gap = 0;
    m_cmd_done = false;
    m_write_open_pending = false;
    m_auto12_pending = false;
    m_auto12_done = false;
}

void Controller::open_read_block() {
    if (!m_data_active || !m_data_read || m_data_failed || m_bre || m_blocks_ready == 0)
        return;
    --m_blocks_ready;
    m_bre = true;
    m_host_remaining = m_cur_block_size;
    raise_normal(irq::kBufferReadReady);
}

void Controller::open_write_block() {
    if (!m_data_active || m_data_read || m_data_failed || m_bwe || m_blocks_supplied >= m_blocks_total)
        return;
    if (buffer_capacity() - m_fifo.size() < m_cur_block_size)
        return;
    m_bwe = true;
    m_host_remaining = m_cur_block_size;
    raise_normal(irq::kBufferWriteReady);
}

void Controller::check_transfer_complete() {
    if (!m_data_active || m_data_failed || !m_cmd_done)
        return;
    if (m_blocks_done < m_blocks_total)
        return;
    if (m_data_read && (m_blocks_ready > 0 || m_bre))
        return;
    if (m_data_auto12 && !m_auto12_done)
        return;
    m_data_active = false;
    m_dat_inhibit = false;
    raise_normal(irq::kTransferComplete);
}

void Controller::abort_data(std::uint16_t error) {
    m_data_failed = true;
    m_bre = m_bwe = false;
    trace(TraceKind::Error, irq_names(0, error));
    raise_error(error);
}

std::uint64_t Controller::data_timeout_clocks() const noexcept {
    const unsigned n = std::min<unsigned>(m_timeout_control & 0x0f, 14);
    return 1ull << (13 + n);
}

bool Controller::gate_condition() const noexcept {
    return m_data_active && m_data_read && !m_data_failed && m_rx == RxState::Data &&
           m_blocks_done < m_blocks_total && m_fifo.size() >= buffer_capacity();
}

BusLines Controller::prepare_host_drive() {
    BusLines out;
    if (m_cmd_state == CmdState::Idle && m_auto12_pending) {
        m_auto12_pending = false;
        start_command({12, 0, static_cast<std::uint16_t>(cmdreg::kResp48Busy | cmdreg::kCrcCheck | cmdreg::kIndexCheck), true});
    }
    if (m_cmd_state == CmdState::Sending)
        out.cmd = ((m_cmd_tx[m_cmd_bit / 8] >> (7 - m_cmd_bit % 8)) & 1u) != 0;

    if (m_data_active && !m_data_read && !m_data_failed) {
        if (m_tx == TxState::Idle && m_cmd_done && m_blocks_queued > 0 && m_tx_gap >= 2) {
            --m_blocks_queued;
            m_tx = TxState::Start;
            m_lane_crc = {};
            trace(TraceKind::BlockStart, strprintf("write %u", m_blocks_done));
        }
        switch (m_tx) {
        case TxState::Start:
            out.dat = 0x0;
            break;
        case TxState::Data: {
            const std::uint8_t byte = m_fifo.front();
            out.dat = (m_nibble % 2 == 0) ? byte >> 4 : byte & 0x0f;
            break;
        }
        case TxState::Crc:
            out.dat = protocol::crc_nibble(m_crc_latched, static_cast<unsigned>(m_nibble));
            break;
        default:
            break;
        }
    }
    return out;
}

void Controller::sample_read(BusLines line) {
    if (m_blocks_done >= m_blocks_total)
        return;
    const std::uint8_t nib = line.dat & 0x0f;

    switch (m_rx) {
    case RxState::WaitStart:
        if (nib == 0) {
            m_rx = RxState::Data;
            m_nibble = 0;
            m_lane_crc = {};
            m_data_wait = 0;
            trace(TraceKind::BlockStart, strprintf("read %u", m_blocks_done));
        } else if (++m_data_wait > data_timeout_clocks()) {
            abort_data(irq::kDataTimeout);
        }
        return;

    case RxState::Data:
        m_lane_crc.push_nibble(nib);
        if (m_nibble % 2 == 0) {
            m_rx_half = static_cast<std::uint8_t>(nib << 4);
        } else {
            m_fifo.push_back(m_rx_half | nib);
            m_max_fill = std::max(m_max_fill, m_fifo.size());
        }
        if (++m_nibble == 2 * m_cur_block_size) {
            m_rx = RxState::Crc;
            m_nibble = 0;
            m_crc_latched = {};
        }
        return;

    case RxState::Crc:
        for (std::size_t i = 0; i < protocol::kDataLanes; ++i)
            m_crc_latched[i] = static_cast<std::uint16_t>((m_crc_latched[i] << 1) | ((nib >> (3 - i)) & 1u));
        if (++m_nibble == 16)
            m_rx = RxState::End;
        return;

    case RxState::End:
        if (nib != 0x0f) {
            abort_data(irq::kDataEndBit);
            return;
        }
        if (m_crc_latched != m_lane_crc.values()) {
            abort_data(irq::kDataCrc);
            return;
        }
        ++m_blocks_done;
        ++m_blocks_ready;
        trace(TraceKind::BlockEnd, strprintf("read %u", m_blocks_done - 1));
        m_rx = RxState::WaitStart;
        m_data_wait = 0;
        if (m_blocks_done == m_blocks_total && m_data_auto12)
            m_auto12_pending = true;
        open_read_block();
        check_transfer_complete();
        return;
    }
}

void Controller::sample_write(BusLines line) {
    const bool dat0 = (line.dat & 1) != 0;

    switch (m_tx) {
    case TxState::Idle:
        m_tx_gap = dat0 ? std::min(m_tx_gap + 1, 16u) : 0;
        return;

    case TxState::Start:
        m_tx = TxState::Data;
        m_nibble = 0;
        return;

    case TxState::Data: {
        const std::uint8_t byte = m_fifo.front();
        m_lane_crc.push_nibble((m_nibble % 2 == 0) ? byte >> 4 : byte & 0x0f);
        if (m_nibble % 2 == 1) {
            m_fifo.pop_front();
            open_write_block();
        }
        if (++m_nibble == 2 * m_cur_block_size) {
            m_tx = TxState::Crc;
            m_nibble = 0;
            m_crc_latched = m_lane_crc.values();
        }
        return;
    }

    case TxState::Crc:
        if (++m_nibble == 16)
            m_tx = TxState::End;
        return;

    case TxState::End:
        m_tx = TxState::StatusWait;
        m_data_wait = 0;
        return;

    case TxState::StatusWait:
        if (!dat0) {
            m_tx = TxState::StatusBits;
            m_nibble = 0;
            m_crc_status = 0;
        } else if (++m_data_wait > 64) {
            abort_data(irq::kDataCrc);
        }
        return;

    case TxState::StatusBits:
        m_crc_status = static_cast<std::uint8_t>((m_crc_status << 1) | (dat0 ? 1 : 0));
        if (++m_nibble == 3)
            m_tx = TxState::StatusEnd;
        return;

    case TxState::StatusEnd:
        if (!dat0 || m_crc_status != 0b010) {
            abort_data(irq::kDataCrc);
            return;
        }
        m_tx = TxState::Busy;
        m_data_wait = 0;
        return;

    case TxState::Busy:
        if (!dat0) {
            if (++m_data_wait > data_timeout_clocks())
                abort_data(irq::kDataTimeout);
            return;
        }
        ++m_blocks_done;
        trace(TraceKind::BlockEnd, strprintf("write %u", m_blocks_done - 1));
        m_tx = TxState::Idle;
        m_tx_gap = 1;
        if (m_blocks_done == m_blocks_total && m_data_auto12)
            m_auto12_pending = true;
        check_transfer_complete();
        return;
    }
}

void Controller::sd_edge() {
    // The write buffer opens on the SD clock after CommandComplete.
    if (m_write_open_pending) {
        m_write_open_pending = false;
        if (m_data_active && !m_data_failed)
            open_write_block();
    }
    if (gate_condition()) {
        if (!m_gating) {
            m_gating = true;
            trace(TraceKind::GateOn, strprintf("fill=%zu", m_fifo.size()));
        }
        ++m_gated_clocks;
        return;
    }
    if (m_gating) {
        m_gating = false;
        trace(TraceKind::GateOff, strprintf("fill=%zu", m_fifo.size()));
    }

    const BusLines host = prepare_host_drive();
    const BusLines line = host & m_card.drive();
    m_card.clock(line);
    ++m_sd_edges;

    sample_cmd(line);
    if (m_data_active && !m_data_failed)
        m_data_read ? sample_read(line) : sample_write(line);
}

} // namespace sdsim::host
