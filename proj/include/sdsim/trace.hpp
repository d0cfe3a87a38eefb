// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sdsim {

enum class TraceKind : std::uint8_t {
    MmioRead,
    MmioWrite,
    Command,
    Response,
    BlockStart,
    BlockEnd,
    GateOn,
    GateOff,
    IrqRaise,
    IrqClear,
    Error,
    Misuse,
};

const char* to_string(TraceKind kind) noexcept;

struct TraceEvent {
    std::uint64_t cycle = 0;
    TraceKind kind{};
    std::string detail;
};

/// In-memory event log, written out as tab-separated lines:
/// `<cycle>\t<kind>\t<detail>`.
class Trace {
public:
    void record(std::uint64_t cycle, TraceKind kind, std::string detail) {
        m_events.push_back({cycle, kind, std::move(detail)});
    }

    const std::vector<TraceEvent>& events() const noexcept { return m_events; }
    std::size_t count(TraceKind kind) const noexcept;
    void clear() noexcept { m_events.clear(); }

    void write(std::ostream& out) const;

private:
    std::vector<TraceEvent> m_events;
};

} // namespace sdsim
