// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdsim/driver.hpp"

#include <cmath>

#include "format.hpp"

namespace sdsim::driver {

namespace reg = host::reg;
namespace cmdreg = host::cmdreg;
namespace irq = host::irq;

namespace {

constexpr std::uint16_t kR1 = cmdreg::kResp48 | cmdreg::kCrcCheck | cmdreg::kIndexCheck;
constexpr std::uint16_t kR1b = cmdreg::kResp48Busy | cmdreg::kCrcCheck | cmdreg::kIndexCheck;
constexpr std::uint16_t kR2 = cmdreg::kResp136 | cmdreg::kCrcCheck;
constexpr std::uint16_t kR3 = cmdreg::kResp48;
constexpr std::uint32_t kAcmd41Arg = card::ocr::kHighCapacity | card::ocr::kVoltageWindow;
constexpr unsigned kWordsPerBlock = card::kBlockSize / 4;
constexpr unsigned kPowerUpClocks = 80;

} // namespace

unsigned choose_divisor(double base_hz, double target_hz) noexcept {
    if (target_hz <= 0)
        return 0x3ff;
    if (base_hz <= target_hz)
        return 0;
    const double n = std::ceil(base_hz / (2.0 * target_hz) - 1e-9);
    return n > 0x3ff ? 0x3ff : static_cast<unsigned>(n);
}

Driver::Driver(HostBus& bus, DriverConfig config) : m_bus(bus), m_config(config) {}

std::uint64_t Driver::sd_period_cycles() const noexcept {
    return m_divisor == 0 ? 1 : 2ull * m_divisor;
}

void Driver::ack(std::uint16_t normal) {
    m_bus.write32(reg::kNormalIntStatus, normal);
}

[[noreturn]] void Driver::fail(const char* step, const std::string& what, std::uint32_t status) {
    StatusSnapshot snap;
    snap.normal = static_cast<std::uint16_t>(status);
    snap.error = static_cast<std::uint16_t>(status >> 16);
    snap.present = m_bus.read(reg::kPresentState);
    snap.card_status = m_last_r1;

    // Clear everything and put both lines back to idle.
    m_bus.write32(reg::kNormalIntStatus, 0xffffffff);
    m_bus.write(reg::kSoftwareReset, 1, 0x06);

    const std::string msg = strprintf("%s: %s (normal=0x%04x error=0x%04x)", step, what.c_str(),
                                      snap.normal, snap.error);
    if (m_phase == Phase::Init) {
        if (snap.error & irq::kCommandTimeout)
            throw InitTimeout(step, msg);
        throw DriverError(msg);
    }
    throw TransferError(msg, snap);
}

std::uint32_t Driver::wait_status(std::uint16_t mask, const char* step) {
    const std::uint64_t start = m_bus.now();
    for (;;) {
        const std::uint32_t st = m_bus.read(reg::kNormalIntStatus);
        if (st >> 16)
            fail(step, "error interrupt", st);
        if (st & mask)
            return st;
        if (m_bus.now() - start > m_config.poll_timeout_cycles) {
            if (m_phase == Phase::Init)
                throw InitTimeout(step, strprintf("%s: status 0x%04x never set", step, mask));
            throw Timeout(strprintf("%s: status 0x%04x never set", step, mask));
        }
    }
}

void Driver::wait_not_inhibited(std::uint32_t mask, const char* step) {
    const std::uint64_t start = m_bus.now();
    while (m_bus.read(reg::kPresentState) & mask) {
        if (m_bus.now() - start > m_config.poll_timeout_cycles)
            throw Timeout(strprintf("%s: controller stayed busy", step));
    }
}

std::uint32_t Driver::command(unsigned index, std::uint32_t arg, std::uint16_t flags, const char* step,
                              std::uint16_t transfer_mode) {
    const bool data = (flags & cmdreg::kDataPresent) != 0;
    const bool busy = (flags & 3) == cmdreg::kResp48Busy;
    wait_not_inhibited(data || busy ? host::present::kCmdInhibit | host::present::kDatInhibit
                                    : host::present::kCmdInhibit,
                       step);

    m_bus.write32(reg::kArgument, arg);
    const std::uint16_t cmd = cmdreg::make(index, flags);
    if (data)
        m_bus.write32(reg::kTransferMode, transfer_mode | (std::uint32_t{cmd} << 16));
    else
        m_bus.write(reg::kCommand, 2, cmd);

    wait_status(irq::kCommandComplete, step);
    ack(irq::kCommandComplete);
    if ((flags & 3) == cmdreg::kRespNone)
        return 0;
    const std::uint32_t rsp = m_bus.read(reg::kResponse);
    if (busy) {
        wait_status(irq::kTransferComplete, step);
        ack(irq::kTransferComplete);
    }
    return rsp;
}

void Driver::check_r1(std::uint32_t r1, const char* step) {
    m_last_r1 = r1;
    if (r1 & card::status::kErrorMask)
        fail(step, strprintf("card status 0x%08x", r1), m_bus.read(reg::kNormalIntStatus));
}

void Driver::set_clock(unsigned divisor) {
    m_divisor = divisor;
    const std::uint16_t cc = host::clk::divisor_bits(divisor) | host::clk::kInternalEnable;
    m_bus.write(reg::kClockControl, 2, cc);
    const std::uint64_t start = m_bus.now();
    while (!(m_bus.read(reg::kClockControl, 2) & host::clk::kInternalStable)) {
        if (m_bus.now() - start > m_config.poll_timeout_cycles)
            throw InitTimeout("clock", "internal clock never stabilised");
    }
    m_bus.write(reg::kClockControl, 2, cc | host::clk::kSdClockEnable);
}

CardInfo Driver::init() {
    m_phase = Phase::Init;
    m_info.reset();
    m_last_r1 = 0;

    m_bus.write(reg::kSoftwareReset, 1, 0x01);
    while (m_bus.read(reg::kSoftwareReset, 1) & 0x01) {
    }
    m_bus.write32(reg::kNormalIntStatusEnable, 0x01ff01ff);

    // Base clock from Capabilities; the field is 6 bits of MHz, so faster
    // system clocks fall back to the platform-provided frequency.
    const std::uint32_t caps = m_bus.read(reg::kCapabilities);
    m_base_hz = ((caps >> 8) & 0x3f) * 1e6;
    if (m_base_hz == 0)
        m_base_hz = m_bus.controller().config().base_freq_hz;

    set_clock(choose_divisor(m_base_hz, m_config.init_clock_hz));
    m_bus.write(reg::kPowerControl, 1, 0x0f);
    m_bus.idle(kPowerUpClocks * sd_period_cycles());

    command(0, 0, cmdreg::kRespNone, "CMD0");

    const std::uint32_t r7 = command(8, 0x1aa, kR1, "CMD8");
    if ((r7 & 0xfff) != 0x1aa)
        throw UnusableCard(strprintf("CMD8 echo 0x%03x, expected 0x1aa", r7 & 0xfff));

    std::uint32_t ocr = 0;
    unsigned polls = 0;
    for (;;) {
        if (polls++ >= m_config.acmd41_poll_limit)
            throw InitTimeout("ACMD41", strprintf("ACMD41: card not ready after %u polls", m_config.acmd41_poll_limit));
        check_r1(command(55, 0, kR1, "CMD55"), "CMD55");
        ocr = command(41, kAcmd41Arg, kR3, "ACMD41");
        if (ocr & card::ocr::kPowerUpDone)
            break;
    }
    if (!(ocr & card::ocr::kHighCapacity))
        throw UnusableCard("standard capacity cards are not supported");

    command(2, 0, kR2, "CMD2");
    const std::uint16_t rca = static_cast<std::uint16_t>(command(3, 0, kR1, "CMD3") >> 16);

    command(9, std::uint32_t{rca} << 16, kR2, "CMD9");
    std::array<std::uint32_t, 4> r{};
    for (unsigned i = 0; i < 4; ++i)
        r[i] = m_bus.read(reg::kResponse + 4 * i);
    // Response registers hold CSD bits 127:8.
    const card::Reg128 csd = {r[0] << 8, (r[1] << 8) | (r[0] >> 24), (r[2] << 8) | (r[1] >> 24),
                              (r[3] << 8) | (r[2] >> 24)};

    check_r1(command(7, std::uint32_t{rca} << 16, kR1b, "CMD7"), "CMD7");
    check_r1(command(55, std::uint32_t{rca} << 16, kR1, "CMD55"), "CMD55");
    check_r1(command(6, 2, kR1, "ACMD6"), "ACMD6");
    const std::uint32_t hc = m_bus.read(reg::kHostControl, 1);
    m_bus.write(reg::kHostControl, 1, hc | 0x02);
    check_r1(command(16, card::kBlockSize, kR1, "CMD16"), "CMD16");

    set_clock(choose_divisor(m_base_hz, m_config.target_clock_hz));
    m_bus.write(reg::kTimeoutControl, 1, m_config.data_timeout);

    CardInfo info;
    info.rca = rca;
    info.capacity_blocks = card::csd_capacity_blocks(csd);
    info.bus_width = 4;
    info.sd_clock_hz = m_divisor == 0 ? m_base_hz : m_base_hz / (2.0 * m_divisor);
    m_info = info;
    m_phase = Phase::Transfer;
    return info;
}

void Driver::check_transfer_args(std::uint64_t lba, std::uint32_t count, std::size_t buffer) const {
    if (!m_info)
        throw PreconditionError("card not initialised");
    if (lba + count > m_info->capacity_blocks)
        throw PreconditionError(strprintf("blocks %llu..%llu beyond capacity %llu",
                                          static_cast<unsigned long long>(lba),
                                          static_cast<unsigned long long>(lba + count),
                                          static_cast<unsigned long long>(m_info->capacity_blocks)));
    if (buffer < std::size_t{count} * card::kBlockSize)
        throw PreconditionError("buffer smaller than transfer");
    if (count > 0xffff)
        throw PreconditionError("block count exceeds 65535");
}

TransferStats Driver::read_blocks(std::uint64_t lba, std::uint32_t count, std::span<std::uint8_t> out) {
    check_transfer_args(lba, count, out.size());
    if (count == 0)
        return {};
    const std::uint64_t start = m_bus.now();
    const bool multi = count > 1;
    const char* step = multi ? "CMD18" : "CMD17";

    m_bus.write32(reg::kBlockSize, card::kBlockSize | (count << 16));
    std::uint16_t tm = host::tm::kRead;
    if (multi)
        tm |= host::tm::kMultiBlock | host::tm::kBlockCountEnable | host::tm::kAutoCmd12;
    check_r1(command(multi ? 18 : 17, static_cast<std::uint32_t>(lba), kR1 | cmdreg::kDataPresent, step, tm), step);

    const std::uint64_t overhead = m_bus.model().software_overhead_per_block;
    for (std::uint32_t b = 0; b < count; ++b) {
        wait_status(irq::kBufferReadReady, step);
        ack(irq::kBufferReadReady);
        if (overhead)
            m_bus.software_overhead(overhead);
        std::uint8_t* dst = out.data() + std::size_t{b} * card::kBlockSize;
        for (unsigned w = 0; w < kWordsPerBlock; ++w) {
            const std::uint32_t v = m_bus.read(reg::kBufferDataPort);
            dst[4 * w + 0] = static_cast<std::uint8_t>(v);
            dst[4 * w + 1] = static_cast<std::uint8_t>(v >> 8);
            dst[4 * w + 2] = static_cast<std::uint8_t>(v >> 16);
            dst[4 * w + 3] = static_cast<std::uint8_t>(v >> 24);
        }
    }
    wait_status(irq::kTransferComplete, step);
    ack(irq::kTransferComplete);
    return {std::uint64_t{count} * card::kBlockSize, m_bus.now() - start};
}

TransferStats Driver::write_blocks(std::uint64_t lba, std::uint32_t count, std::span<const std::uint8_t> in) {
    check_transfer_args(lba, count, in.size());
    if (count == 0)
        return {};
    const std::uint64_t start = m_bus.now();
    const bool multi = count > 1;
    const char* step = multi ? "CMD25" : "CMD24";

    const std::uint32_t present = m_bus.read(reg::kPresentState);
    if (!(present & host::present::kWriteEnabledLevel))
        fail(step, "card is write protected", m_bus.read(reg::kNormalIntStatus));

    m_bus.write32(reg::kBlockSize, card::kBlockSize | (count << 16));
    std::uint16_t tm = 0;
    if (multi)
        tm |= host::tm::kMultiBlock | host::tm::kBlockCountEnable | host::tm::kAutoCmd12;
    check_r1(command(multi ? 25 : 24, static_cast<std::uint32_t>(lba), kR1 | cmdreg::kDataPresent, step, tm), step);

    const std::uint64_t overhead = m_bus.model().software_overhead_per_block;
    for (std::uint32_t b = 0; b < count; ++b) {
        wait_status(irq::kBufferWriteReady, step);
        ack(irq::kBufferWriteReady);
        if (overhead)
            m_bus.software_overhead(overhead);
        const std::uint8_t* src = in.data() + std::size_t{b} * card::kBlockSize;
        for (unsigned w = 0; w < kWordsPerBlock; ++w) {
            const std::uint32_t v = std::uint32_t{src[4 * w]} | (std::uint32_t{src[4 * w + 1]} << 8) |
                                    (std::uint32_t{src[4 * w + 2]} << 16) | (std::uint32_t{src[4 * w + 3]} << 24);
            m_bus.write32(reg::kBufferDataPort, v);
        }
    }
    wait_status(irq::kTransferComplete, step);
    ack(irq::kTransferComplete);
    return {std::uint64_t{count} * card::kBlockSize, m_bus.now() - start};
}

} // namespace sdsim::driver
