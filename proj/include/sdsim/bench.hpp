// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sdsim/controller.hpp"
#include "sdsim/cost_model.hpp"

namespace sdsim::bench {

/// Invalid or infeasible scenario; detected before any simulation.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Direction : std::uint8_t { Read, Write, Both };
const char* to_string(Direction d) noexcept;
std::optional<Direction> parse_direction(std::string_view s) noexcept;

enum class Format : std::uint8_t { Table, Csv, Json };
std::optional<Format> parse_format(std::string_view s) noexcept;

/// Per-field replacements for the regime's default costs.
struct CostOverrides {
    std::optional<std::uint64_t> read_latency_cycles;
    std::optional<std::uint64_t> buffer_read_cycles;
    std::optional<std::uint64_t> buffer_write_cycles;
    std::optional<std::uint64_t> control_write_cycles;
    std::optional<std::uint64_t> fence_penalty_cycles;
    std::optional<std::uint64_t> software_overhead_per_block;

    bool operator==(const CostOverrides&) const = default;
};

struct ScenarioConfig {
    std::string name = "custom";
    cost::Regime regime = cost::Regime::Bare;
    double host_freq_hz = 50e6;
    double sd_freq_hz = 25e6;
    std::uint32_t block_count = 16;
    std::uint32_t block_size = 512;
    Direction direction = Direction::Read;
    std::uint64_t lba = 0;
    std::uint32_t repetitions = 1;

    // Card image: in-memory with a seeded fill, or loaded from a raw file.
    std::uint64_t capacity_blocks = 8192;
    std::string image_path;
    bool read_only = false;
    std::uint64_t seed = 1;

    // Timing
    unsigned ncr = 8;
    unsigned nac = 8;
    unsigned program_busy = 16;
    unsigned read_buffer_blocks = 2;
    unsigned write_buffer_blocks = 1;

    CostOverrides cost;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Per-block software cost applied by the built-in Linux scenarios.
inline constexpr std::uint64_t kLinuxBlockOverhead = 23000;

ScenarioConfig parse_config(std::string_view yaml);
ScenarioConfig load_config(const std::filesystem::path& path);
void validate(const ScenarioConfig& config);
cost::CostModel resolve_cost(const ScenarioConfig& config);

struct CliOverrides {
    std::optional<std::string> regime;
    std::optional<double> host_freq_hz;
    std::optional<double> sd_freq_hz;
    std::optional<std::uint32_t> blocks;
    std::optional<std::string> direction;
};
void apply_overrides(ScenarioConfig& config, const CliOverrides& overrides);

const std::vector<ScenarioConfig>& builtin_scenarios();
std::optional<ScenarioConfig> find_builtin(std::string_view name);

struct BenchResult {
    std::string scenario;
    Direction direction = Direction::Read;
    std::uint64_t bytes = 0;
    /// Host cycles for the transfer alone (mean over repetitions).
    std::uint64_t host_cycles = 0;
    std::uint64_t init_cycles = 0;
    /// bytes * host_freq_hz / host_cycles; 0 when nothing moved.
    double throughput_Bps = 0;
    double sd_clock_hz = 0;
    host::MmioCounters mmio;
    std::uint64_t gated_sd_clocks = 0;
    bool data_ok = true;
    ScenarioConfig config;

    bool operator==(const BenchResult&) const = default;
};

/// One result per direction ("both" writes, then reads back). Throws
/// ConfigError before simulating, or driver errors from the run. When
/// `trace` is given the full event trace is written to it.
std::vector<BenchResult> run_scenario(const ScenarioConfig& config, std::ostream* trace = nullptr);

void emit(const std::vector<BenchResult>& results, Format format, std::ostream& out);
/// Throws std::runtime_error if `path` cannot be written.
void emit_to_file(const std::vector<BenchResult>& results, Format format, const std::filesystem::path& path);

inline constexpr const char* kCsvHeader = "scenario,direction,bytes,host_cycles,throughput_Bps,gated_sd_clocks";

std::string to_json(const std::vector<BenchResult>& results);
std::vector<BenchResult> from_json(std::string_view text);

} // namespace sdsim::bench
