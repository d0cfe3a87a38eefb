// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdsim/trace.hpp"

#include <algorithm>
#include <ostream>

namespace sdsim {

const char* to_string(TraceKind kind) noexcept {
    switch (kind) {
    case TraceKind::MmioRead: return "mmio_read";
    case TraceKind::MmioWrite: return "mmio_write";
    case TraceKind::Command: return "command";
    case TraceKind::Response: return "response";
    case TraceKind::BlockStart: return "block_start";
    case TraceKind::BlockEnd: return "block_end";
    case TraceKind::GateOn: return "gate_on";
    case TraceKind::GateOff: return "gate_off";
    case TraceKind::IrqRaise: return "irq_raise";
    case TraceKind::IrqClear: return "irq_clear";
    case TraceKind::Error: return "error";
    case TraceKind::Misuse: return "misuse";
    }
    return "?";
}

std::size_t Trace::count(TraceKind kind) const noexcept {
    return static_cast<std::size_t>(std::count_if(m_events.begin(), m_events.end(),
                                                  [kind](const TraceEvent& e) { return e.kind == kind; }));
}

void Trace::write(std::ostream& out) const {
    for (const auto& e : m_events)
        out << e.cycle << '\t' << to_string(e.kind) << '\t' << e.detail << '\n';
}

} // namespace sdsim
