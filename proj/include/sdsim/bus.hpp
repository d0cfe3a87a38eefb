// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace sdsim {

/// Levels on the SD bus during one SD clock. Undriven lines are pulled
/// high; when both sides drive, the resulting level is the wired AND.
struct BusLines {
    bool cmd = true;
    std::uint8_t dat = 0xf;

    friend BusLines operator&(BusLines a, BusLines b) noexcept {
        return {a.cmd && b.cmd, static_cast<std::uint8_t>(a.dat & b.dat & 0xf)};
    }

    bool operator==(const BusLines&) const = default;
};

inline constexpr BusLines kIdleBus{};

} // namespace sdsim
