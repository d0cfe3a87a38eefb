// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdsim/card.hpp"

#include <algorithm>
#include <fstream>
#include <string>

namespace sdsim::card {

using protocol::Response;
using protocol::ResponseKind;

const char* to_string(CardState state) noexcept {
    switch (state) {
    case CardState::Idle: return "idle";
    case CardState::Ready: return "ready";
    case CardState::Ident: return "ident";
    case CardState::Standby: return "stby";
    case CardState::Transfer: return "tran";
    case CardState::SendingData: return "data";
    case CardState::ReceiveData: return "rcv";
    case CardState::Programming: return "prg";
    }
    return "?";
}

const char* to_string(CardEventKind kind) noexcept {
    switch (kind) {
    case CardEventKind::CommandReceived: return "cmd_rx";
    case CardEventKind::CommandRejected: return "cmd_reject";
    case CardEventKind::ResponseStart: return "rsp_start";
    case CardEventKind::ResponseEnd: return "rsp_end";
    case CardEventKind::DataStart: return "data_start";
    case CardEventKind::DataEnd: return "data_end";
    case CardEventKind::CrcStatus: return "crc_status";
    case CardEventKind::BusyEnd: return "busy_end";
    }
    return "?";
}

std::uint32_t get_bits(const Reg128& reg, unsigned hi, unsigned lo) noexcept {
    std::uint32_t v = 0;
    for (unsigned b = hi + 1; b-- > lo;)
        v = (v << 1) | ((reg[b / 32] >> (b % 32)) & 1u);
    return v;
}

void set_bits(Reg128& reg, unsigned hi, unsigned lo, std::uint32_t value) noexcept {
    for (unsigned b = lo; b <= hi; ++b) {
        const std::uint32_t mask = 1u << (b % 32);
        if ((value >> (b - lo)) & 1u)
            reg[b / 32] |= mask;
        else
            reg[b / 32] &= ~mask;
    }
}

std::uint64_t csd_capacity_blocks(const Reg128& csd) noexcept {
    return (std::uint64_t{get_bits(csd, 69, 48)} + 1) * 1024;
}

// -- CardImage ---------------------------------------------------------------

CardImage CardImage::in_memory(std::size_t capacity_blocks) {
    if (capacity_blocks == 0)
        throw std::invalid_argument("card capacity must be at least one block");
    CardImage img;
    img.m_data.assign(capacity_blocks * kBlockSize, 0);
    return img;
}

CardImage CardImage::open_file(const std::filesystem::path& path, bool read_only) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open card image: " + path.string());

    CardImage img;
    img.m_data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError("cannot read card image: " + path.string());
    if (img.m_data.empty() || img.m_data.size() % kBlockSize != 0)
        throw IoError("card image size is not a non-zero multiple of 512: " + path.string());

    img.m_path = path;
    img.m_read_only = read_only;
    return img;
}

CardImage CardImage::create_file(const std::filesystem::path& path, std::size_t capacity_blocks) {
    CardImage img = in_memory(capacity_blocks);
    img.m_path = path;
    img.m_dirty = true;
    img.flush();
    return img;
}

CardImage::CardImage(CardImage&& other) noexcept
    : m_data(std::move(other.m_data)),
      m_path(std::exchange(other.m_path, std::nullopt)),
      m_read_only(other.m_read_only),
      m_dirty(std::exchange(other.m_dirty, false)) {}

CardImage& CardImage::operator=(CardImage&& other) noexcept {
    if (this != &other) {
        try {
            flush();
        } catch (...) {
        }
        m_data = std::move(other.m_data);
        m_path = std::exchange(other.m_path, std::nullopt);
        m_read_only = other.m_read_only;
        m_dirty = std::exchange(other.m_dirty, false);
    }
    return *this;
}

CardImage::~CardImage() {
    try {
        flush();
    } catch (...) {
    }
}

std::span<const std::uint8_t, kBlockSize> CardImage::block(std::size_t lba) const {
    if (lba >= capacity_blocks())
        throw std::out_of_range("block address out of range");
    return std::span<const std::uint8_t, kBlockSize>(m_data.data() + lba * kBlockSize, kBlockSize);
}

void CardImage::store(std::size_t lba, std::span<const std::uint8_t, kBlockSize> data) {
    if (lba >= capacity_blocks())
        throw std::out_of_range("block address out of range");
    std::copy(data.begin(), data.end(), m_data.begin() + static_cast<std::ptrdiff_t>(lba * kBlockSize));
    m_dirty = true;
}

std::uint32_t CardImage::content_hash() const noexcept {
    std::uint32_t h = 2166136261u;
    for (std::uint8_t b : m_data) {
        h ^= b;
        h *= 16777619u;
    }
    return h;
}

void CardImage::flush() {
    if (!m_path || !m_dirty)
        return;
    std::ofstream out(*m_path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(m_data.data()), static_cast<std::streamsize>(m_data.size()));
    if (!out)
        throw IoError("cannot write card image: " + m_path->string());
    m_dirty = false;
}

// -- Card --------------------------------------------------------------------

Card::Card(CardImage image, CardConfig config) : m_image(std::move(image)), m_config(config) {
    m_serial = m_image.content_hash();
    m_next_rca = static_cast<std::uint16_t>((m_serial ^ (m_serial >> 16)) & 0xffff);
    if (m_next_rca == 0)
        m_next_rca = 1;
    reset_to_idle();
}

void Card::build_registers() {
    // CID: MID, OID, PNM "SIM", PRV, PSN from image hash, MDT 2025-01.
    std::array<std::uint8_t, 16> cid{0x53, 'S', 'M', 'S', 'I', 'M', ' ', ' ', 0x10};
    cid[9] = static_cast<std::uint8_t>(m_serial >> 24);
    cid[10] = static_cast<std::uint8_t>(m_serial >> 16);
    cid[11] = static_cast<std::uint8_t>(m_serial >> 8);
    cid[12] = static_cast<std::uint8_t>(m_serial);
    cid[13] = 0x01;
    cid[14] = 0x91;
    cid[15] = static_cast<std::uint8_t>((protocol::crc7(std::span(cid).first(15)) << 1) | 1);
    for (int w = 0; w < 4; ++w) {
        const std::size_t base = static_cast<std::size_t>(3 - w) * 4;
        m_regs.cid[w] = (std::uint32_t{cid[base]} << 24) | (std::uint32_t{cid[base + 1]} << 16) |
                        (std::uint32_t{cid[base + 2]} << 8) | cid[base + 3];
    }

    const std::uint64_t units = (m_image.capacity_blocks() + 1023) / 1024;
    Reg128 csd{};
    set_bits(csd, 127, 126, 1);      // CSD structure 2.0
    set_bits(csd, 119, 112, 0x0e);   // TAAC
    set_bits(csd, 103, 96, 0x32);    // TRAN_SPEED, 25 MHz
    set_bits(csd, 95, 84, 0x5b5);    // CCC
    set_bits(csd, 83, 80, 9);        // READ_BL_LEN
    set_bits(csd, 69, 48, static_cast<std::uint32_t>(units - 1));
    set_bits(csd, 46, 46, 1);        // ERASE_BLK_EN
    set_bits(csd, 45, 39, 0x7f);     // SECTOR_SIZE
    set_bits(csd, 28, 26, 2);        // R2W_FACTOR
    set_bits(csd, 25, 22, 9);        // WRITE_BL_LEN
    set_bits(csd, 12, 12, m_image.read_only() ? 1 : 0);
    std::array<std::uint8_t, 15> head{};
    for (std::size_t i = 0; i < head.size(); ++i)
        head[i] = static_cast<std::uint8_t>(get_bits(csd, 127 - 8 * static_cast<unsigned>(i), 120 - 8 * static_cast<unsigned>(i)));
    set_bits(csd, 7, 0, static_cast<std::uint32_t>((protocol::crc7(head) << 1) | 1));
    m_regs.csd = csd;

    m_regs.scr = 0x0235800000000000ull;
}

void Card::reset_to_idle() {
    m_state = CardState::Idle;
    m_regs = {};
    build_registers();
    m_status = 0;
    m_expect_acmd = false;
    m_acmd41_polls = 0;
    m_cmd_rx_bits = 0;
    m_cmd_tx.clear();
    m_cmd_tx_pos = 0;
    m_dat_tx.clear();
    m_dat_tx_pos = 0;
    m_dat_phase = DatPhase::None;
    m_dat_rx = DatRx::Idle;
    m_stop_after_busy = false;
}

void Card::set_powered(bool on) {
    if (on == m_powered)
        return;
    m_powered = on;
    m_clocks_powered = 0;
    reset_to_idle();
}

bool Card::busy() const noexcept {
    return m_dat_phase == DatPhase::WriteAck && m_dat_tx_pos < m_dat_tx.size();
}

std::uint32_t Card::r1_status(bool app_cmd) const noexcept {
    std::uint32_t s = (m_status & status::kErrorMask) | (static_cast<std::uint32_t>(m_state) << 9);
    if (m_state == CardState::Transfer || (m_state == CardState::ReceiveData && !busy()))
        s |= status::kReadyForData;
    if (app_cmd)
        s |= status::kAppCmd;
    return s;
}

Response Card::make_r1(std::uint8_t index, ResponseKind kind, bool app_cmd) {
    Response rsp{kind, index, {r1_status(app_cmd), 0, 0, 0}, kind == ResponseKind::R1b};
    m_status &= ~status::kErrorMask;
    return rsp;
}

void Card::reject(std::uint32_t bit) {
    m_status |= bit;
}

void Card::queue_response(const Response& rsp) {
    const auto wire = protocol::serialize_response(rsp);
    m_cmd_tx.assign(m_config.ncr, true);
    m_cmd_tx_frame_start = m_cmd_tx.size();
    for (std::uint8_t byte : wire)
        for (int i = 7; i >= 0; --i)
            m_cmd_tx.push_back(((byte >> i) & 1u) != 0);
    m_cmd_tx_pos = 0;
}

void Card::queue_read_block(std::uint64_t delay) {
    const auto block = protocol::make_block(m_image.block(m_data_lba));
    m_dat_tx.assign(delay, 0xf);
    m_dat_tx_block_start = m_dat_tx.size();
    const auto nibbles = protocol::serialize_block_nibbles(block);
    m_dat_tx.insert(m_dat_tx.end(), nibbles.begin(), nibbles.end());
    m_dat_tx_pos = 0;
    m_dat_phase = DatPhase::ReadBlock;
}

CommandResult Card::handle_command(const protocol::CommandFrame& cmd) {
    CommandResult result;
    if (!m_powered)
        return result;

    if (protocol::encode_command(cmd.index, cmd.argument).crc != cmd.crc) {
        reject(status::kComCrcError);
        return result;
    }

    const bool app = std::exchange(m_expect_acmd, false);
    const std::uint32_t arg = cmd.argument;
    const bool addressed = (arg >> 16) == m_regs.rca;
    const std::uint8_t idx = cmd.index;

    auto respond = [&](Response rsp) {
        result.response = rsp;
        queue_response(rsp);
    };
    auto illegal = [&] { reject(status::kIllegalCommand); };
    auto data_ok = [&](std::uint64_t lba, bool write) -> bool {
        if (lba >= m_image.capacity_blocks()) {
            m_status |= status::kAddressError;
            return false;
        }
        if (m_regs.bus_width != 4) {
            m_status |= status::kError;
            return false;
        }
        if (write && m_image.read_only()) {
            m_status |= status::kWpViolation;
            return false;
        }
        return true;
    };

    if (app) {
        switch (idx) {
        case 6:
            if (m_state != CardState::Transfer)
                return illegal(), result;
            if ((arg & 3) == 0 || (arg & 3) == 2)
                m_regs.bus_width = (arg & 3) == 2 ? 4 : 1;
            else
                m_status |= status::kError;
            respond(make_r1(idx, ResponseKind::R1, true));
            return result;

        case 41: {
            if (m_state != CardState::Idle)
                return illegal(), result;
            const bool inquiry = (arg & ocr::kVoltageWindow) == 0;
            if (!inquiry) {
                ++m_acmd41_polls;
                const bool hcs = (arg & ocr::kHighCapacity) != 0;
                if (hcs && !m_config.never_ready && m_acmd41_polls > m_config.acmd41_busy_polls) {
                    m_regs.ocr |= ocr::kPowerUpDone | ocr::kHighCapacity;
                    m_state = CardState::Ready;
                }
            }
            respond(Response{ResponseKind::R3, 0, {m_regs.ocr, 0, 0, 0}, false});
            return result;
        }

        default:
            break; // undefined ACMDs are treated as regular commands
        }
    }

    switch (idx) {
    case 0:
        reset_to_idle();
        return result;

    case 8:
        if (m_state != CardState::Idle)
            return illegal(), result;
        if (((arg >> 8) & 0xf) != 0x1)
            return result; // voltage not supported: no response
        respond(Response{ResponseKind::R7, idx, {arg & 0xfff, 0, 0, 0}, false});
        return result;

    case 55:
        if (m_state >= CardState::Standby && !addressed)
            return result;
        m_expect_acmd = true;
        respond(make_r1(idx, ResponseKind::R1, true));
        return result;

    case 2:
        if (m_state != CardState::Ready)
            return illegal(), result;
        m_state = CardState::Ident;
        respond(Response{ResponseKind::R2, idx, m_regs.cid, false});
        return result;

    case 3: {
        if (m_state != CardState::Ident && m_state != CardState::Standby)
            return illegal(), result;
        m_regs.rca = m_next_rca;
        const std::uint32_t st = m_status;
        const std::uint32_t bits = ((st >> 8) & 0x8000) | ((st >> 8) & 0x4000) | ((st >> 6) & 0x2000) |
                                   (static_cast<std::uint32_t>(m_state) << 9);
        m_state = CardState::Standby;
        m_status &= ~status::kErrorMask;
        respond(Response{ResponseKind::R6, idx, {(std::uint32_t{m_regs.rca} << 16) | bits, 0, 0, 0}, false});
        return result;
    }

    case 9:
        if (m_state != CardState::Standby)
            return illegal(), result;
        if (!addressed)
            return result;
        respond(Response{ResponseKind::R2, idx, m_regs.csd, false});
        return result;

    case 7:
        if (m_state != CardState::Standby && m_state != CardState::Transfer)
            return illegal(), result;
        if (!addressed || m_regs.rca == 0) {
            m_state = CardState::Standby;
            return result;
        }
        {
            auto rsp = make_r1(idx, ResponseKind::R1b);
            m_state = CardState::Transfer;
            respond(rsp);
        }
        return result;

    case 13:
        if (m_state < CardState::Standby)
            return illegal(), result;
        if (!addressed)
            return result;
        respond(make_r1(idx, ResponseKind::R1));
        return result;

    case 16:
        if (m_state != CardState::Transfer)
            return illegal(), result;
        if (arg != kBlockSize)
            m_status |= status::kBlockLenError;
        respond(make_r1(idx, ResponseKind::R1));
        return result;

    case 17:
    case 18: {
        if (m_state != CardState::Transfer)
            return illegal(), result;
        const bool ok = data_ok(arg, false);
        respond(make_r1(idx, ResponseKind::R1));
        if (!ok)
            return result;
        m_state = CardState::SendingData;
        m_data_lba = arg;
        m_data_multi = idx == 18;
        const std::uint64_t delay = m_config.ncr + protocol::kShortResponseBits + m_config.nac;
        queue_read_block(delay);
        result.data = {DataActivityKind::Send, arg, m_data_multi, delay};
        return result;
    }

    case 24:
    case 25: {
        if (m_state != CardState::Transfer)
            return illegal(), result;
        const bool ok = data_ok(arg, true);
        respond(make_r1(idx, ResponseKind::R1));
        if (!ok)
            return result;
        m_state = CardState::ReceiveData;
        m_data_lba = arg;
        m_data_multi = idx == 25;
        m_dat_rx = DatRx::Idle;
        result.data = {DataActivityKind::Receive, arg, m_data_multi, 0};
        return result;
    }

    case 12: {
        if (m_state == CardState::SendingData) {
            auto rsp = make_r1(idx, ResponseKind::R1b);
            m_dat_tx.clear();
            m_dat_tx_pos = 0;
            m_dat_phase = DatPhase::None;
            m_state = CardState::Transfer;
            respond(rsp);
            return result;
        }
        if (m_state == CardState::ReceiveData) {
            auto rsp = make_r1(idx, ResponseKind::R1b);
            m_dat_rx = DatRx::Idle;
            m_state = CardState::Programming;
            m_stop_after_busy = true;
            if (m_dat_tx_pos >= m_dat_tx.size()) {
                m_dat_tx.assign(m_config.ncr + protocol::kShortResponseBits, 0xf);
                m_dat_tx.insert(m_dat_tx.end(), m_config.program_busy, 0xe);
                m_dat_tx_pos = 0;
                m_dat_tx_block_start = std::numeric_limits<std::size_t>::max();
                m_dat_phase = DatPhase::WriteAck;
            }
            respond(rsp);
            return result;
        }
        illegal();
        return result;
    }

    default:
        illegal();
        return result;
    }
}

std::optional<protocol::DataBlock> Card::read_block(std::uint64_t lba) {
    if (lba >= m_image.capacity_blocks()) {
        m_status |= status::kAddressError;
        return std::nullopt;
    }
    return protocol::make_block(m_image.block(lba));
}

BlockStatus Card::write_block(std::uint64_t lba, std::span<const std::uint8_t> data) {
    if (data.size() != kBlockSize)
        throw std::invalid_argument("block must be 512 bytes");
    if (lba >= m_image.capacity_blocks()) {
        m_status |= status::kAddressError;
        return BlockStatus::AddressError;
    }
    if (m_image.read_only()) {
        m_status |= status::kWpViolation;
        return BlockStatus::WriteProtected;
    }
    m_image.store(lba, data.first<kBlockSize>());
    return BlockStatus::Ok;
}

BusLines Card::drive() const noexcept {
    BusLines out;
    if (!m_powered)
        return out;
    if (m_cmd_tx_pos < m_cmd_tx.size())
        out.cmd = m_cmd_tx[m_cmd_tx_pos];
    if (m_dat_tx_pos < m_dat_tx.size())
        out.dat = m_dat_tx[m_dat_tx_pos];
    return out;
}

void Card::emit(std::vector<CardEvent>* events, CardEventKind kind, std::uint64_t value) const {
    if (events)
        events->push_back({m_clock, kind, value});
}

void Card::on_dat_tx_done(std::vector<CardEvent>* events) {
    m_dat_tx.clear();
    m_dat_tx_pos = 0;

    if (m_dat_phase == DatPhase::ReadBlock) {
        ++m_blocks_sent;
        emit(events, CardEventKind::DataEnd, m_data_lba);
        m_dat_phase = DatPhase::None;
        if (m_state != CardState::SendingData)
            return;
        if (!m_data_multi) {
            m_state = CardState::Transfer;
            return;
        }
        ++m_data_lba;
        if (m_data_lba >= m_image.capacity_blocks()) {
            m_status |= status::kOutOfRange;
            return; // stays in data state until CMD12
        }
        queue_read_block(m_config.nac);
        return;
    }

    if (m_dat_phase == DatPhase::WriteAck) {
        emit(events, CardEventKind::BusyEnd, m_data_lba);
        m_dat_phase = DatPhase::None;
        if (m_stop_after_busy || !m_data_multi) {
            m_stop_after_busy = false;
            m_state = CardState::Transfer;
            return;
        }
        ++m_data_lba;
        m_state = CardState::ReceiveData;
    }
}

void Card::on_block_received(std::vector<CardEvent>* events) {
    const bool crc_ok = m_rx_crc.values() == m_rx_sent_crc;
    std::uint8_t token = 0b010;
    if (!crc_ok) {
        token = 0b101;
        m_status |= status::kComCrcError;
    } else if (write_block(m_data_lba, m_rx_bytes) != BlockStatus::Ok) {
        token = 0b110;
    } else {
        ++m_blocks_written;
    }
    emit(events, CardEventKind::CrcStatus, token);

    // Two clocks of turnaround, then start, 3 status bits, end, busy.
    m_dat_tx.assign(2, 0xf);
    m_dat_tx.push_back(0xe);
    for (int i = 2; i >= 0; --i)
        m_dat_tx.push_back(((token >> i) & 1u) ? 0xf : 0xe);
    m_dat_tx.push_back(0xf);
    m_dat_tx.insert(m_dat_tx.end(), m_config.program_busy, 0xe);
    m_dat_tx_pos = 0;
    m_dat_tx_block_start = std::numeric_limits<std::size_t>::max();
    m_dat_phase = DatPhase::WriteAck;
    if (!m_data_multi)
        m_state = CardState::Programming;
}

void Card::receive_command_bit(bool bit, std::vector<CardEvent>* events) {
    if (m_cmd_rx_bits == 0) {
        if (bit || m_clocks_powered <= m_config.init_clocks)
            return;
        m_cmd_rx.fill(0);
    }
    if (bit)
        m_cmd_rx[m_cmd_rx_bits / 8] |= static_cast<std::uint8_t>(0x80u >> (m_cmd_rx_bits % 8));
    if (++m_cmd_rx_bits < protocol::kCommandBits)
        return;
    m_cmd_rx_bits = 0;

    try {
        const auto decoded = protocol::decode_command(m_cmd_rx);
        emit(events, CardEventKind::CommandReceived, decoded.index);
        handle_command(protocol::encode_command(decoded.index, decoded.argument));
    } catch (const protocol::CrcError&) {
        emit(events, CardEventKind::CommandRejected, m_cmd_rx[0] & 0x3f);
        reject(status::kComCrcError);
    } catch (const protocol::FramingError&) {
        emit(events, CardEventKind::CommandRejected, m_cmd_rx[0] & 0x3f);
    }
}

void Card::receive_data_nibble(std::uint8_t nibble, std::vector<CardEvent>* events) {
    switch (m_dat_rx) {
    case DatRx::Idle:
        if (nibble != 0x0)
            return;
        m_dat_rx = DatRx::Data;
        m_rx_bytes.assign(kBlockSize, 0);
        m_rx_count = 0;
        m_rx_crc = {};
        m_rx_sent_crc = {};
        emit(events, CardEventKind::DataStart, m_data_lba);
        return;

    case DatRx::Data:
        m_rx_crc.push_nibble(nibble);
        if (m_rx_count % 2 == 0)
            m_rx_bytes[m_rx_count / 2] = static_cast<std::uint8_t>(nibble << 4);
        else
            m_rx_bytes[m_rx_count / 2] |= nibble;
        if (++m_rx_count == 2 * kBlockSize) {
            m_dat_rx = DatRx::Crc;
            m_rx_count = 0;
        }
        return;

    case DatRx::Crc:
        for (std::size_t i = 0; i < protocol::kDataLanes; ++i)
            m_rx_sent_crc[i] = static_cast<std::uint16_t>((m_rx_sent_crc[i] << 1) | ((nibble >> (3 - i)) & 1u));
        if (++m_rx_count == 16)
            m_dat_rx = DatRx::End;
        return;

    case DatRx::End:
        m_dat_rx = DatRx::Idle;
        if (nibble != 0xf) {
            // End bit error: treated like a CRC failure.
            m_rx_sent_crc[0] = static_cast<std::uint16_t>(~m_rx_crc.values()[0]);
        }
        emit(events, CardEventKind::DataEnd, m_data_lba);
        on_block_received(events);
        return;
    }
}

void Card::clock(BusLines line, std::vector<CardEvent>* events) {
    if (!m_powered)
        return;
    ++m_clock;
    ++m_clocks_powered;

    const bool cmd_tx_active = m_cmd_tx_pos < m_cmd_tx.size();
    const bool dat_tx_active = m_dat_tx_pos < m_dat_tx.size();

    if (cmd_tx_active) {
        if (m_cmd_tx_pos == m_cmd_tx_frame_start)
            emit(events, CardEventKind::ResponseStart);
        if (++m_cmd_tx_pos == m_cmd_tx.size()) {
            emit(events, CardEventKind::ResponseEnd);
            m_cmd_tx.clear();
            m_cmd_tx_pos = 0;
        }
    }
    if (dat_tx_active) {
        if (m_dat_tx_pos == m_dat_tx_block_start)
            emit(events, CardEventKind::DataStart, m_data_lba);
        if (++m_dat_tx_pos == m_dat_tx.size())
            on_dat_tx_done(events);
    }

    if (!cmd_tx_active)
        receive_command_bit(line.cmd, events);
    if (!dat_tx_active && m_state == CardState::ReceiveData)
        receive_data_nibble(line.dat, events);
}

std::vector<CardEvent> Card::tick(std::uint64_t sd_clocks) {
    std::vector<CardEvent> events;
    for (std::uint64_t i = 0; i < sd_clocks; ++i)
        clock(drive(), &events);
    return events;
}

} // namespace sdsim::card
