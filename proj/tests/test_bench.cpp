// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "sdsim/bench.hpp"
#include "sdsim/regmap.hpp"
#include "support.hpp"

using namespace sdsim;
using namespace sdsim::bench;

namespace {

ScenarioConfig small(const char* name, cost::Regime regime, Direction d, std::uint32_t blocks = 4) {
    ScenarioConfig c;
    c.name = name;
    c.regime = regime;
    c.direction = d;
    c.block_count = blocks;
    c.capacity_blocks = 64;
    return c;
}

} // namespace

TEST(Config, ParsesAllKeys) {
    const auto c = parse_config(R"(
# comment
name: custom-run
regime: linux-opt
host_freq_hz: 100e6
sd_freq_hz: 25e6
block_count: 8
block_size: 512
direction: both
lba: 3
repetitions: 2
card:
  capacity_blocks: 1024
  read_only: false
  seed: 42
timing:
  ncr: 2
  nac: 3
  program_busy: 40
  read_buffer_blocks: 4
  write_buffer_blocks: 2
cost:
  read_latency_cycles: 20
  software_overhead_per_block: 1e3
)");
    EXPECT_EQ(c.name, "custom-run");
    EXPECT_EQ(c.regime, cost::Regime::LinuxOpt);
    EXPECT_DOUBLE_EQ(c.host_freq_hz, 100e6);
    EXPECT_EQ(c.block_count, 8u);
    EXPECT_EQ(c.direction, Direction::Both);
    EXPECT_EQ(c.lba, 3u);
    EXPECT_EQ(c.repetitions, 2u);
    EXPECT_EQ(c.capacity_blocks, 1024u);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.ncr, 2u);
    EXPECT_EQ(c.nac, 3u);
    EXPECT_EQ(c.program_busy, 40u);
    EXPECT_EQ(c.read_buffer_blocks, 4u);
    EXPECT_EQ(c.write_buffer_blocks, 2u);
    EXPECT_EQ(c.cost.read_latency_cycles, 20u);
    EXPECT_EQ(c.cost.software_overhead_per_block, 1000u);
    EXPECT_FALSE(c.cost.buffer_read_cycles);

    const auto m = resolve_cost(c);
    EXPECT_EQ(m.read_latency_cycles, 20u);
    EXPECT_EQ(m.buffer_read_cycles, 29u);
    EXPECT_EQ(m.software_overhead_per_block, 1000u);
}

TEST(Config, EmptyDocumentGivesDefaults) {
    EXPECT_EQ(parse_config(""), ScenarioConfig{});
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse_config("regime: turbo"), ConfigError);
    EXPECT_THROW(parse_config("blocks: 4"), ConfigError);
    EXPECT_THROW(parse_config("block_count: -1"), ConfigError);
    EXPECT_THROW(parse_config("block_count: 2.5"), ConfigError);
    EXPECT_THROW(parse_config("timing: {nack: 3}"), ConfigError);
    EXPECT_THROW(parse_config("direction: sideways"), ConfigError);
    EXPECT_THROW(parse_config("name: [unclosed"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/scenario.yaml"), ConfigError);
}

TEST(Config, ValidationRejectsInfeasibleClocks) {
    ScenarioConfig c;
    c.sd_freq_hz = 30e6;
    EXPECT_THROW(validate(c), ConfigError);
    EXPECT_THROW(run_scenario(c), ConfigError);
    c.sd_freq_hz = 25e6;
    EXPECT_NO_THROW(validate(c));
    c.block_size = 1024;
    EXPECT_THROW(validate(c), ConfigError);
    c = {};
    c.lba = 8190;
    EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, CliOverrides) {
    ScenarioConfig c;
    CliOverrides o;
    o.regime = "ideal";
    o.host_freq_hz = 100e6;
    o.blocks = 3;
    o.direction = "write";
    apply_overrides(c, o);
    EXPECT_EQ(c.regime, cost::Regime::Ideal);
    EXPECT_DOUBLE_EQ(c.host_freq_hz, 100e6);
    EXPECT_EQ(c.block_count, 3u);
    EXPECT_EQ(c.direction, Direction::Write);
    o.regime = "nope";
    EXPECT_THROW(apply_overrides(c, o), ConfigError);
}

TEST(Suite, CoversEveryBar) {
    std::vector<std::string> names;
    for (const auto& c : builtin_scenarios())
        names.push_back(c.name);
    EXPECT_EQ(names, (std::vector<std::string>{"ideal-read", "ideal-write", "bare-read", "bare-write",
                                               "linux-unopt-read", "linux-unopt-write", "linux-opt-read",
                                               "linux-opt-write", "scaled-read", "scaled-write"}));
    EXPECT_DOUBLE_EQ(find_builtin("scaled-read")->host_freq_hz, 500e6);
    EXPECT_EQ(find_builtin("scaled-read")->regime, cost::Regime::Bare);
    EXPECT_FALSE(find_builtin("bogus"));
}

TEST(Run, ZeroBlocksStillInitialises) {
    auto c = small("zero", cost::Regime::Bare, Direction::Read, 0);
    const auto r = run_scenario(c);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].bytes, 0u);
    EXPECT_EQ(r[0].host_cycles, 0u);
    EXPECT_GT(r[0].init_cycles, 0u);
    EXPECT_EQ(r[0].throughput_Bps, 0.0);
}

TEST(Run, ThroughputDefinition) {
    for (auto d : {Direction::Read, Direction::Write}) {
        const auto r = run_scenario(small("t", cost::Regime::Bare, d)).at(0);
        EXPECT_EQ(r.throughput_Bps, static_cast<double>(r.bytes) * 50e6 / static_cast<double>(r.host_cycles));
        EXPECT_TRUE(r.data_ok);
    }
}

TEST(Run, IsDeterministic) {
    auto c = small("det", cost::Regime::Bare, Direction::Both);
    c.repetitions = 2;
    const auto a = run_scenario(c);
    const auto b = run_scenario(c);
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a[0].direction, Direction::Write);
    EXPECT_EQ(a[1].direction, Direction::Read);
    EXPECT_TRUE(a[0].data_ok && a[1].data_ok);
}

TEST(Run, NeverExceedsBusBandwidth) {
    for (const auto& c : builtin_scenarios()) {
        const auto r = run_scenario(c).at(0);
        EXPECT_LE(r.throughput_Bps, c.sd_freq_hz / 2) << c.name;
        EXPECT_TRUE(r.data_ok) << c.name;
        EXPECT_EQ(r.bytes, 8192u);
    }
}

TEST(Run, LoadsImageWithoutModifyingIt) {
    const auto path = std::filesystem::temp_directory_path() / ("sdsim_bench_img_" + std::to_string(::getpid()));
    {
        std::ofstream f(path, std::ios::binary);
        std::string blk(512, '\0');
        for (int b = 0; b < 32; ++b) {
            std::fill(blk.begin(), blk.end(), static_cast<char>(b));
            f << blk;
        }
    }
    auto c = small("img", cost::Regime::Ideal, Direction::Both);
    c.image_path = path.string();
    const auto r = run_scenario(c);
    EXPECT_TRUE(r[0].data_ok && r[1].data_ok);
    std::ifstream f(path, std::ios::binary);
    std::string first(512, ' ');
    f.read(first.data(), 512);
    EXPECT_EQ(first, std::string(512, '\0'));
    std::filesystem::remove(path);

    c.image_path = "/nonexistent/card.img";
    EXPECT_THROW(run_scenario(c), ConfigError);
}

TEST(Emit, CsvSchema) {
    std::ostringstream empty;
    emit({}, Format::Csv, empty);
    EXPECT_EQ(empty.str(), "scenario,direction,bytes,host_cycles,throughput_Bps,gated_sd_clocks\n");

    const auto r = run_scenario(small("csv", cost::Regime::Bare, Direction::Read));
    std::ostringstream out;
    emit(r, Format::Csv, out);
    std::istringstream lines(out.str());
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    EXPECT_EQ(header, kCsvHeader);
    EXPECT_EQ(row.rfind("csv,read,2048,", 0), 0u);
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 5);
}

TEST(Emit, JsonRoundTrip) {
    auto c = small("json", cost::Regime::LinuxOpt, Direction::Both);
    c.cost.software_overhead_per_block = 1234;
    const auto r = run_scenario(c);
    EXPECT_EQ(from_json(to_json(r)), r);
    EXPECT_TRUE(from_json(to_json({})).empty());
    std::ostringstream out;
    emit(r, Format::Json, out);
    EXPECT_EQ(from_json(out.str()), r);
}

TEST(Emit, TableHasOneRowPerResult) {
    const auto r = run_scenario(small("tbl", cost::Regime::Ideal, Direction::Both));
    std::ostringstream out;
    emit(r, Format::Table, out);
    const auto text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    EXPECT_NE(text.find("tbl"), std::string::npos);
}

TEST(Emit, UnwritableDestination) {
    EXPECT_THROW(emit_to_file({}, Format::Csv, "/nonexistent/dir/out.csv"), std::runtime_error);
}

TEST(Trace, MonotoneAndGatePairsMatch) {
    auto c = small("gated", cost::Regime::Bare, Direction::Read, 8);
    std::ostringstream out;
    run_scenario(c, &out);
    std::istringstream lines(out.str());
    std::string line;
    std::uint64_t last = 0;
    int on = 0, off = 0, depth = 0;
    while (std::getline(lines, line)) {
        const auto tab1 = line.find('\t');
        const auto tab2 = line.find('\t', tab1 + 1);
        ASSERT_NE(tab2, std::string::npos) << line;
        const auto cycle = std::stoull(line.substr(0, tab1));
        EXPECT_GE(cycle, last);
        last = cycle;
        const auto kind = line.substr(tab1 + 1, tab2 - tab1 - 1);
        if (kind == "gate_on") {
            ++on;
            EXPECT_EQ(++depth, 1);
        }
        if (kind == "gate_off") {
            ++off;
            EXPECT_EQ(--depth, 0);
        }
    }
    EXPECT_GT(on, 0);
    EXPECT_EQ(on, off);
}

TEST(Trace, SingleCmd0HasOneCommandEvent) {
    card::Card card(card::CardImage::in_memory(16));
    host::Controller ctl(card);
    Trace t;
    ctl.set_trace(&t);
    ctl.mmio_write(host::reg::kClockControl, 2, host::clk::divisor_bits(1) | host::clk::kInternalEnable);
    ctl.tick(8);
    ctl.mmio_write(host::reg::kClockControl, 2,
                   host::clk::divisor_bits(1) | host::clk::kInternalEnable | host::clk::kSdClockEnable);
    ctl.mmio_write(host::reg::kPowerControl, 1, 1);
    ctl.tick(200);
    ctl.mmio_write(host::reg::kCommand, 2, host::cmdreg::make(0, host::cmdreg::kRespNone));
    ctl.tick(500);
    std::ostringstream out;
    t.write(out);
    const auto text = out.str();
    std::size_t n = 0;
    for (std::size_t pos = 0; (pos = text.find("\tcommand\t", pos)) != std::string::npos; ++pos)
        ++n;
    EXPECT_EQ(n, 1u);
    EXPECT_EQ(t.count(TraceKind::Response), 0u);
}

TEST(RegisterMap, MarkdownListsEveryRegister) {
    const auto md = host::register_map_markdown();
    EXPECT_NE(md.find("| Offset | Name | Width | Reset | Fields |"), std::string::npos);
    for (const auto& r : host::register_table()) {
        EXPECT_NE(md.find(r.name), std::string::npos) << r.name;
    }
    EXPECT_NE(md.find("| 0xFE | Host Controller Version | 2 | 0x0100 |"), std::string::npos);
}
