// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>

namespace sdsim::cost {

enum class Regime : std::uint8_t { Ideal, Bare, LinuxUnopt, LinuxOpt };

const char* to_string(Regime regime) noexcept;
/// Accepts "ideal", "bare", "linux-unopt", "linux-opt".
std::optional<Regime> parse_regime(std::string_view name) noexcept;

enum class Access : std::uint8_t { Read, Write };

/// Host CPU cycles per MMIO access, per regime.
struct CostModel {
    Regime regime = Regime::Bare;
    std::uint64_t read_latency_cycles = 11;
    /// Full iteration of a 4-byte copy loop reading the buffer data port.
    std::uint64_t buffer_read_cycles = 29;
    std::uint64_t buffer_write_cycles = 9;
    std::uint64_t control_write_cycles = 9;
    /// Added to every MMIO access.
    std::uint64_t fence_penalty_cycles = 0;
    /// Software stack cost charged once per transferred block.
    std::uint64_t software_overhead_per_block = 0;
    double host_freq_hz = 50e6;
    double sd_freq_hz = 25e6;

    static CostModel for_regime(Regime regime, double host_freq_hz = 50e6, double sd_freq_hz = 25e6);

    std::uint64_t charge_mmio(Access kind, bool buffer_port) const noexcept;

    bool operator==(const CostModel&) const = default;
};

/// Host cycle counter. Throws std::overflow_error if it would wrap.
class HostClock {
public:
    explicit HostClock(double frequency_hz = 50e6) : m_frequency(frequency_hz) {}

    std::uint64_t now() const noexcept { return m_now; }
    double frequency() const noexcept { return m_frequency; }
    double seconds() const noexcept { return static_cast<double>(m_now) / m_frequency; }

    void advance(std::uint64_t cycles) {
        if (cycles > UINT64_MAX - m_now)
            throw std::overflow_error("host clock overflow");
        m_now += cycles;
    }

private:
    std::uint64_t m_now = 0;
    double m_frequency;
};

} // namespace sdsim::cost
