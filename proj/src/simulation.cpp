// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdsim/simulation.hpp"

namespace sdsim {

HostBus::HostBus(host::Controller& controller, cost::CostModel model)
    : m_controller(controller), m_model(model), m_clock(model.host_freq_hz) {}

void HostBus::spend(std::uint64_t cycles) {
    m_clock.advance(cycles);
    m_controller.tick(cycles);
}

std::uint32_t HostBus::read(unsigned offset, unsigned width) {
    const bool port = (offset & ~3u) == host::reg::kBufferDataPort;
    const std::uint32_t v = m_controller.mmio_read(offset, width);
    const std::uint64_t c = m_model.charge_mmio(cost::Access::Read, port);
    m_mmio_cycles += c;
    spend(c);
    return v;
}

void HostBus::write(unsigned offset, unsigned width, std::uint32_t value) {
    const bool port = (offset & ~3u) == host::reg::kBufferDataPort;
    m_controller.mmio_write(offset, width, value);
    const std::uint64_t c = m_model.charge_mmio(cost::Access::Write, port);
    m_mmio_cycles += c;
    spend(c);
}

void HostBus::idle(std::uint64_t cycles) {
    m_idle_cycles += cycles;
    spend(cycles);
}

void HostBus::software_overhead(std::uint64_t cycles) {
    m_overhead_cycles += cycles;
    spend(cycles);
}

Simulation::Simulation(card::CardImage image, const SimConfig& config)
    : m_card(std::move(image), config.card),
      m_controller(m_card, [&] {
          host::ControllerConfig c = config.controller;
          c.base_freq_hz = config.cost.host_freq_hz;
          return c;
      }()),
      m_bus(m_controller, config.cost) {}

Trace& Simulation::enable_trace() {
    if (!m_trace) {
        m_trace = std::make_unique<Trace>();
        m_controller.set_trace(m_trace.get());
    }
    return *m_trace;
}

} // namespace sdsim
