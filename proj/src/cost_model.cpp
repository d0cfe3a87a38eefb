// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdsim/cost_model.hpp"

namespace sdsim::cost {

const char* to_string(Regime regime) noexcept {
    switch (regime) {
    case Regime::Ideal: return "ideal";
    case Regime::Bare: return "bare";
    case Regime::LinuxUnopt: return "linux-unopt";
    case Regime::LinuxOpt: return "linux-opt";
    }
    return "?";
}

std::optional<Regime> parse_regime(std::string_view name) noexcept {
    for (Regime r : {Regime::Ideal, Regime::Bare, Regime::LinuxUnopt, Regime::LinuxOpt})
        if (name == to_string(r))
            return r;
    return std::nullopt;
}

CostModel CostModel::for_regime(Regime regime, double host_freq_hz, double sd_freq_hz) {
    CostModel m;
    m.regime = regime;
    m.host_freq_hz = host_freq_hz;
    m.sd_freq_hz = sd_freq_hz;
    switch (regime) {
    case Regime::Ideal:
        m.read_latency_cycles = 1;
        m.buffer_read_cycles = 1;
        m.buffer_write_cycles = 1;
        m.control_write_cycles = 1;
        break;
    case Regime::Bare:
    case Regime::LinuxOpt:
        break;
    case Regime::LinuxUnopt:
        m.fence_penalty_cycles = 500;
        break;
    }
    return m;
}

std::uint64_t CostModel::charge_mmio(Access kind, bool buffer_port) const noexcept {
    std::uint64_t base = 0;
    if (kind == Access::Read)
        base = buffer_port ? buffer_read_cycles : read_latency_cycles;
    else
        base = buffer_port ? buffer_write_cycles : control_write_cycles;
    return base + fence_penalty_cycles;
}

} // namespace sdsim::cost
