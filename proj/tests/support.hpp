// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sdsim/card.hpp"
#include "sdsim/driver.hpp"
#include "sdsim/simulation.hpp"

namespace testing_support {

inline std::vector<std::uint8_t> random_bytes(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::uint8_t> out(n);
    for (auto& b : out)
        b = static_cast<std::uint8_t>(rng());
    return out;
}

/// Sends a command straight to a card and lets its response drain.
inline sdsim::card::CommandResult send(sdsim::card::Card& card, unsigned index, std::uint32_t arg,
                                       std::uint64_t drain = 0) {
    auto r = card.handle_command(sdsim::protocol::encode_command(index, arg));
    if (drain)
        card.tick(drain);
    return r;
}

/// Walks a card through identification into the transfer state, 4-bit bus.
inline std::uint16_t bring_to_transfer(sdsim::card::Card& card) {
    card.tick(80);
    send(card, 0, 0);
    send(card, 8, 0x1aa, 64);
    for (int i = 0; i < 10; ++i) {
        send(card, 55, 0, 64);
        auto r = send(card, 41, 0x40ff8000, 64);
        if (r.response && (r.response->words[0] & sdsim::card::ocr::kPowerUpDone))
            break;
    }
    send(card, 2, 0, 160);
    auto r6 = send(card, 3, 0, 64);
    const auto rca = static_cast<std::uint16_t>(r6.response->words[0] >> 16);
    send(card, 7, std::uint32_t{rca} << 16, 64);
    send(card, 55, std::uint32_t{rca} << 16, 64);
    send(card, 6, 2, 64);
    return rca;
}

/// Simulation with the driver already through init.
struct Rig {
    explicit Rig(sdsim::cost::Regime regime = sdsim::cost::Regime::Ideal, std::size_t blocks = 8192,
                 sdsim::SimConfig cfg = {}, double host_hz = 50e6)
        : config([&] {
              cfg.cost = sdsim::cost::CostModel::for_regime(regime, host_hz, 25e6);
              return cfg;
          }()),
          sim(sdsim::card::CardImage::in_memory(blocks), config),
          drv(sim.bus()) {}

    sdsim::SimConfig config;
    sdsim::Simulation sim;
    sdsim::driver::Driver drv;
};

} // namespace testing_support
