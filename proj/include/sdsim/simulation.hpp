// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>

#include "sdsim/card.hpp"
#include "sdsim/controller.hpp"
#include "sdsim/cost_model.hpp"
#include "sdsim/trace.hpp"

namespace sdsim {

/// Host side of the MMIO bus. Every access is charged through the cost
/// model and the controller is advanced by the same number of cycles, so
/// host and controller share one clock.
class HostBus {
public:
    HostBus(host::Controller& controller, cost::CostModel model);

    std::uint32_t read(unsigned offset, unsigned width = 4);
    void write(unsigned offset, unsigned width, std::uint32_t value);
    void write32(unsigned offset, std::uint32_t value) { write(offset, 4, value); }

    /// Non-MMIO host time (delays, software overhead).
    void idle(std::uint64_t cycles);
    void software_overhead(std::uint64_t cycles);

    std::uint64_t now() const noexcept { return m_clock.now(); }
    const cost::HostClock& clock() const noexcept { return m_clock; }
    const cost::CostModel& model() const noexcept { return m_model; }
    host::Controller& controller() noexcept { return m_controller; }

    std::uint64_t mmio_cycles() const noexcept { return m_mmio_cycles; }
    std::uint64_t idle_cycles() const noexcept { return m_idle_cycles; }
    std::uint64_t overhead_cycles() const noexcept { return m_overhead_cycles; }

private:
    void spend(std::uint64_t cycles);

    host::Controller& m_controller;
    cost::CostModel m_model;
    cost::HostClock m_clock;
    std::uint64_t m_mmio_cycles = 0;
    std::uint64_t m_idle_cycles = 0;
    std::uint64_t m_overhead_cycles = 0;
};

struct SimConfig {
    card::CardConfig card;
    host::ControllerConfig controller;
    cost::CostModel cost;
};

/// Card, controller and host bus wired together.
class Simulation {
public:
    Simulation(card::CardImage image, const SimConfig& config);

    card::Card& card() noexcept { return m_card; }
    host::Controller& controller() noexcept { return m_controller; }
    HostBus& bus() noexcept { return m_bus; }

    Trace& enable_trace();
    Trace* trace() noexcept { return m_trace.get(); }

private:
    card::Card m_card;
    host::Controller m_controller;
    HostBus m_bus;
    std::unique_ptr<Trace> m_trace;
};

} // namespace sdsim
