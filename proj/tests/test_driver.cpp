// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>
#include <random>

#include "support.hpp"

using namespace sdsim;
using namespace sdsim::driver;
using testing_support::random_bytes;
using testing_support::Rig;

TEST(Driver, InitReportsCardInfo) {
    Rig rig;
    const auto info = rig.drv.init();
    EXPECT_NE(info.rca, 0);
    EXPECT_EQ(info.rca, rig.sim.card().registers().rca);
    EXPECT_EQ(info.capacity_blocks, 8192u);
    EXPECT_EQ(info.bus_width, 4u);
    EXPECT_DOUBLE_EQ(info.sd_clock_hz, 25e6);
    EXPECT_EQ(rig.sim.card().state(), card::CardState::Transfer);
    EXPECT_EQ(rig.sim.controller().mmio_read(host::reg::kHostControl, 1) & 0x02, 0x02u);
}

TEST(Driver, InitClockIsAtMost400kHz) {
    EXPECT_EQ(choose_divisor(50e6, 400e3), 63u);
    EXPECT_LE(50e6 / (2 * choose_divisor(50e6, 400e3)), 400e3);
    EXPECT_EQ(choose_divisor(500e6, 400e3), 625u);
    EXPECT_EQ(choose_divisor(50e6, 25e6), 1u);
    EXPECT_EQ(choose_divisor(500e6, 25e6), 10u);
    EXPECT_EQ(choose_divisor(50e6, 50e6), 0u);
    EXPECT_EQ(choose_divisor(50e6, 20e6), 2u);
}

TEST(Driver, InitAtHighHostClock) {
    Rig rig(cost::Regime::Bare, 8192, {}, 500e6);
    const auto info = rig.drv.init();
    EXPECT_DOUBLE_EQ(info.sd_clock_hz, 25e6);
    EXPECT_EQ(rig.sim.controller().divisor(), 10u);
}

TEST(Driver, NeverReadyCardTimesOutAtAcmd41) {
    SimConfig cfg;
    cfg.card.never_ready = true;
    Rig rig(cost::Regime::Ideal, 64, cfg);
    try {
        rig.drv.init();
        FAIL() << "init succeeded";
    } catch (const InitTimeout& e) {
        EXPECT_EQ(e.step(), "ACMD41");
    }
    EXPECT_FALSE(rig.drv.info());
}

TEST(Driver, SilentCardTimesOutAtCmd8) {
    SimConfig cfg;
    cfg.card.init_clocks = 1'000'000'000;
    Rig rig(cost::Regime::Ideal, 64, cfg);
    try {
        rig.drv.init();
        FAIL() << "init succeeded";
    } catch (const InitTimeout& e) {
        EXPECT_EQ(e.step(), "CMD8");
    }
}

TEST(Driver, DoubleInit) {
    Rig rig;
    const auto a = rig.drv.init();
    const auto b = rig.drv.init();
    EXPECT_EQ(a.rca, b.rca);
    EXPECT_EQ(b.capacity_blocks, 8192u);
    std::vector<std::uint8_t> buf(512);
    EXPECT_NO_THROW(rig.drv.read_blocks(0, 1, buf));
}

TEST(Driver, SingleBlockReadMatchesImage) {
    Rig rig;
    std::mt19937_64 rng(8);
    const auto data = random_bytes(rng, 512);
    rig.sim.card().image().store(0, std::span<const std::uint8_t, 512>(data.data(), 512));
    rig.drv.init();
    std::vector<std::uint8_t> buf(512);
    const auto st = rig.drv.read_blocks(0, 1, buf);
    EXPECT_EQ(st.bytes, 512u);
    EXPECT_GT(st.cycles, 0u);
    EXPECT_EQ(buf, data);
}

TEST(Driver, ZeroCountTouchesNothing) {
    Rig rig;
    rig.drv.init();
    const auto before = rig.sim.controller().counters();
    const auto t = rig.sim.bus().now();
    std::vector<std::uint8_t> buf;
    EXPECT_EQ(rig.drv.read_blocks(0, 0, buf).bytes, 0u);
    EXPECT_EQ(rig.drv.write_blocks(0, 0, buf).bytes, 0u);
    EXPECT_EQ(rig.sim.controller().counters(), before);
    EXPECT_EQ(rig.sim.bus().now(), t);
}

TEST(Driver, OverrunIsRejectedBeforeAnyAccess) {
    Rig rig(cost::Regime::Ideal, 1024);
    rig.drv.init();
    const auto before = rig.sim.controller().counters();
    std::vector<std::uint8_t> buf(4 * 512);
    EXPECT_THROW(rig.drv.write_blocks(1022, 4, buf), PreconditionError);
    EXPECT_THROW(rig.drv.read_blocks(1021, 4, buf), PreconditionError);
    EXPECT_THROW(rig.drv.read_blocks(0, 5, buf), PreconditionError);
    EXPECT_EQ(rig.sim.controller().counters(), before);
}

TEST(Driver, TransfersBeforeInitAreRejected) {
    Rig rig;
    std::vector<std::uint8_t> buf(512);
    EXPECT_THROW(rig.drv.read_blocks(0, 1, buf), PreconditionError);
}

TEST(Driver, WriteThenReadBack) {
    Rig rig;
    rig.drv.init();
    std::mt19937_64 rng(12);
    for (std::uint32_t count : {1u, 2u, 7u, 16u}) {
        const auto data = random_bytes(rng, count * 512);
        const std::uint64_t lba = rng() % (8192 - count);
        rig.drv.write_blocks(lba, count, data);
        std::vector<std::uint8_t> back(count * 512);
        rig.drv.read_blocks(lba, count, back);
        EXPECT_EQ(back, data) << "count " << count;
    }
}

TEST(Driver, WriteProtectedCardFails) {
    Rig rig;
    rig.sim.card().image().set_read_only(true);
    rig.drv.init();
    std::vector<std::uint8_t> buf(512, 0x11);
    try {
        rig.drv.write_blocks(0, 1, buf);
        FAIL() << "write succeeded";
    } catch (const TransferError& e) {
        EXPECT_FALSE(e.snapshot().present & host::present::kWriteEnabledLevel);
    }
    EXPECT_EQ(rig.sim.card().image().block(0)[0], 0);
}

TEST(Driver, SlowCardRaisesTimeout) {
    SimConfig cfg;
    cfg.card.nac = 1'000'000;
    cfg.cost = cost::CostModel::for_regime(cost::Regime::Ideal);
    Simulation sim(card::CardImage::in_memory(64), cfg);
    DriverConfig dc;
    dc.poll_timeout_cycles = 100'000;
    Driver drv(sim.bus(), dc);
    drv.init();
    std::vector<std::uint8_t> buf(512);
    EXPECT_THROW(drv.read_blocks(0, 1, buf), Timeout);
}

TEST(Driver, ShortPollBudgetRaisesTimeout) {
    Rig rig;
    rig.drv.init();
    DriverConfig dc;
    dc.poll_timeout_cycles = 20;
    Driver impatient(rig.sim.bus(), dc);
    // Re-initialising with a tiny budget trips on the first slow command.
    EXPECT_THROW(impatient.init(), InitTimeout);
}

TEST(Driver, RecoversAfterError) {
    Rig rig;
    rig.drv.init();
    rig.sim.card().image().set_read_only(true);
    std::vector<std::uint8_t> buf(512, 1);
    EXPECT_THROW(rig.drv.write_blocks(0, 1, buf), TransferError);
    rig.sim.card().image().set_read_only(false);
    EXPECT_NO_THROW(rig.drv.write_blocks(0, 1, buf));
    std::vector<std::uint8_t> back(512);
    rig.drv.read_blocks(0, 1, back);
    EXPECT_EQ(back, buf);
}

TEST(Driver, ClearsEveryStatusBitItSees) {
    Rig rig(cost::Regime::Bare);
    rig.drv.init();
    Trace& t = rig.sim.enable_trace();
    std::vector<std::uint8_t> buf(16 * 512, 0x42);
    rig.drv.write_blocks(100, 16, buf);
    rig.drv.read_blocks(100, 16, buf);
    rig.drv.read_blocks(5, 1, buf);

    std::map<std::string, int> outstanding;
    for (const auto& e : t.events()) {
        if (e.kind == TraceKind::IrqRaise)
            ++outstanding[e.detail];
        if (e.kind == TraceKind::IrqClear)
            --outstanding[e.detail];
    }
    for (const auto& [name, n] : outstanding)
        EXPECT_EQ(n, 0) << name;
    EXPECT_EQ(rig.sim.controller().mmio_read(host::reg::kNormalIntStatus, 4), 0u);
}

TEST(Driver, ChargedCyclesMatchAccessCounts) {
    for (auto regime : {cost::Regime::Ideal, cost::Regime::Bare, cost::Regime::LinuxUnopt}) {
        Rig rig(regime);
        Trace& t = rig.sim.enable_trace();
        rig.drv.init();
        std::vector<std::uint8_t> buf(3 * 512, 7);
        rig.drv.write_blocks(0, 3, buf);
        rig.drv.read_blocks(0, 3, buf);

        const auto& m = rig.sim.bus().model();
        const auto& c = rig.sim.controller().counters();
        std::uint64_t from_trace = 0;
        for (const auto& e : t.events()) {
            if (e.kind != TraceKind::MmioRead && e.kind != TraceKind::MmioWrite)
                continue;
            const bool port = e.detail.rfind("off=0x20 ", 0) == 0;
            from_trace += m.charge_mmio(e.kind == TraceKind::MmioRead ? cost::Access::Read : cost::Access::Write, port);
        }
        EXPECT_EQ(rig.sim.bus().mmio_cycles(), from_trace);
        EXPECT_EQ(t.count(TraceKind::MmioRead) + t.count(TraceKind::MmioWrite), c.total());
        EXPECT_EQ(rig.sim.bus().mmio_cycles(), c.control_reads * m.charge_mmio(cost::Access::Read, false) +
                                                   c.control_writes * m.charge_mmio(cost::Access::Write, false) +
                                                   c.buffer_reads * m.charge_mmio(cost::Access::Read, true) +
                                                   c.buffer_writes * m.charge_mmio(cost::Access::Write, true));
        EXPECT_EQ(rig.sim.bus().now(),
                  rig.sim.bus().mmio_cycles() + rig.sim.bus().idle_cycles() + rig.sim.bus().overhead_cycles());
    }
}

TEST(Driver, UsesOneDataPortAccessPerWord) {
    Rig rig;
    rig.drv.init();
    const auto before = rig.sim.controller().counters();
    std::vector<std::uint8_t> buf(16 * 512);
    rig.drv.read_blocks(0, 16, buf);
    rig.drv.write_blocks(0, 16, buf);
    const auto& after = rig.sim.controller().counters();
    EXPECT_EQ(after.buffer_reads - before.buffer_reads, 16u * 128u);
    EXPECT_EQ(after.buffer_writes - before.buffer_writes, 16u * 128u);
    EXPECT_EQ(rig.sim.controller().empty_port_reads(), 0u);
}

TEST(Driver, BytesIdenticalAcrossRegimes) {
    std::vector<std::vector<std::uint8_t>> seen;
    for (auto r : {cost::Regime::Ideal, cost::Regime::Bare, cost::Regime::LinuxUnopt, cost::Regime::LinuxOpt}) {
        Rig rig(r);
        std::mt19937_64 rng(77);
        const auto data = random_bytes(rng, 8 * 512);
        rig.drv.init();
        rig.drv.write_blocks(10, 8, data);
        std::vector<std::uint8_t> back(8 * 512);
        rig.drv.read_blocks(10, 8, back);
        seen.push_back(back);
    }
    for (const auto& s : seen)
        EXPECT_EQ(s, seen.front());
}
