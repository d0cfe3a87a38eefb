// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "sdsim/simulation.hpp"

namespace sdsim::driver {

struct CardInfo {
    std::uint16_t rca = 0;
    std::uint64_t capacity_blocks = 0;
    unsigned bus_width = 1;
    double sd_clock_hz = 0;
};

class DriverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CMD8 did not echo the check pattern.
class UnusableCard : public DriverError {
public:
    using DriverError::DriverError;
};

class InitTimeout : public DriverError {
public:
    InitTimeout(std::string step, const std::string& what) : DriverError(what), m_step(std::move(step)) {}
    const std::string& step() const noexcept { return m_step; }

private:
    std::string m_step;
};

/// Status snapshot taken when a transfer failed.
struct StatusSnapshot {
    std::uint16_t normal = 0;
    std::uint16_t error = 0;
    std::uint32_t present = 0;
    std::uint32_t card_status = 0;
};

class TransferError : public DriverError {
public:
    TransferError(const std::string& what, StatusSnapshot snap) : DriverError(what), m_snapshot(snap) {}
    const StatusSnapshot& snapshot() const noexcept { return m_snapshot; }

private:
    StatusSnapshot m_snapshot;
};

class Timeout : public DriverError {
public:
    using DriverError::DriverError;
};

/// Request outside the card or before init; nothing was issued.
class PreconditionError : public DriverError {
public:
    using DriverError::DriverError;
};

struct DriverConfig {
    double init_clock_hz = 400e3;
    double target_clock_hz = 25e6;
    unsigned acmd41_poll_limit = 1000;
    /// Host cycles a status poll may spin before giving up.
    std::uint64_t poll_timeout_cycles = 200'000'000;
    std::uint8_t data_timeout = 0x0e;
};

struct TransferStats {
    std::uint64_t bytes = 0;
    std::uint64_t cycles = 0;
};

/// Smallest divisor N with base / (2N) <= target (N = 0 passes base through).
unsigned choose_divisor(double base_hz, double target_hz) noexcept;

/// Polling PIO driver programmed purely through the host bus.
class Driver {
public:
    explicit Driver(HostBus& bus, DriverConfig config = {});

    CardInfo init();

    TransferStats read_blocks(std::uint64_t lba, std::uint32_t count, std::span<std::uint8_t> out);
    TransferStats write_blocks(std::uint64_t lba, std::uint32_t count, std::span<const std::uint8_t> in);

    const std::optional<CardInfo>& info() const noexcept { return m_info; }
    const DriverConfig& config() const noexcept { return m_config; }

private:
    enum class Phase : std::uint8_t { Init, Transfer };

    std::uint32_t command(unsigned index, std::uint32_t arg, std::uint16_t flags, const char* step,
                          std::uint16_t transfer_mode = 0);
    void check_r1(std::uint32_t r1, const char* step);
    std::uint32_t wait_status(std::uint16_t mask, const char* step);
    void wait_not_inhibited(std::uint32_t mask, const char* step);
    void ack(std::uint16_t normal);
    [[noreturn]] void fail(const char* step, const std::string& what, std::uint32_t status);
    std::uint64_t sd_period_cycles() const noexcept;
    void set_clock(unsigned divisor);
    void check_transfer_args(std::uint64_t lba, std::uint32_t count, std::size_t buffer) const;

    HostBus& m_bus;
    DriverConfig m_config;
    std::optional<CardInfo> m_info;
    Phase m_phase = Phase::Init;
    std::uint32_t m_last_r1 = 0;
    unsigned m_divisor = 0;
    double m_base_hz = 0;
};

} // namespace sdsim::driver
