// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdsim/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "format.hpp"
#include "sdsim/driver.hpp"
#include "sdsim/simulation.hpp"

namespace sdsim::bench {

using nlohmann::json;

const char* to_string(Direction d) noexcept {
    switch (d) {
    case Direction::Read: return "read";
    case Direction::Write: return "write";
    case Direction::Both: return "both";
    }
    return "?";
}

std::optional<Direction> parse_direction(std::string_view s) noexcept {
    for (Direction d : {Direction::Read, Direction::Write, Direction::Both})
        if (s == to_string(d))
            return d;
    return std::nullopt;
}

std::optional<Format> parse_format(std::string_view s) noexcept {
    if (s == "table")
        return Format::Table;
    if (s == "csv")
        return Format::Csv;
    if (s == "json")
        return Format::Json;
    return std::nullopt;
}

// -- Config ------------------------------------------------------------------

namespace {

void check_keys(const YAML::Node& node, const char* where, std::initializer_list<const char*> allowed) {
    if (!node.IsMap())
        throw ConfigError(strprintf("%s: expected a mapping", where));
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!ok.count(key))
            throw ConfigError(strprintf("%s: unknown key '%s'", where, key.c_str()));
    }
}

template <typename T>
void read_key(const YAML::Node& node, const char* key, T& out) {
    const YAML::Node v = node[key];
    if (!v)
        return;
    try {
        out = v.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(strprintf("key '%s': cannot parse '%s'", key, v.Scalar().c_str()));
    }
}

// Integer keys also accept 1e3-style values as long as they are exact.
template <typename T>
void read_int(const YAML::Node& node, const char* key, T& out) {
    const YAML::Node v = node[key];
    if (!v)
        return;
    double d = 0;
    try {
        d = v.as<double>();
    } catch (const YAML::Exception&) {
        throw ConfigError(strprintf("key '%s': cannot parse '%s'", key, v.Scalar().c_str()));
    }
    if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d)) ||
        d > static_cast<double>(std::numeric_limits<T>::max()))
        throw ConfigError(strprintf("key '%s': expected a non-negative integer, got '%s'", key, v.Scalar().c_str()));
    out = static_cast<T>(d);
}

void read_opt(const YAML::Node& node, const char* key, std::optional<std::uint64_t>& out) {
    if (!node[key])
        return;
    std::uint64_t v = 0;
    read_int(node, key, v);
    out = v;
}

} // namespace

ScenarioConfig parse_config(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ScenarioConfig c;
    if (root.IsNull())
        return c;
    check_keys(root, "config",
               {"name", "regime", "host_freq_hz", "sd_freq_hz", "block_count", "block_size", "direction", "lba",
                "repetitions", "card", "timing", "cost"});

    read_key(root, "name", c.name);
    if (root["regime"]) {
        const auto s = root["regime"].as<std::string>();
        const auto r = cost::parse_regime(s);
        if (!r)
            throw ConfigError("unknown regime '" + s + "'");
        c.regime = *r;
    }
    read_key(root, "host_freq_hz", c.host_freq_hz);
    read_key(root, "sd_freq_hz", c.sd_freq_hz);
    read_int(root, "block_count", c.block_count);
    read_int(root, "block_size", c.block_size);
    if (root["direction"]) {
        const auto s = root["direction"].as<std::string>();
        const auto d = parse_direction(s);
        if (!d)
            throw ConfigError("unknown direction '" + s + "'");
        c.direction = *d;
    }
    read_int(root, "lba", c.lba);
    read_int(root, "repetitions", c.repetitions);

    if (const YAML::Node card = root["card"]) {
        check_keys(card, "card", {"capacity_blocks", "image", "read_only", "seed"});
        read_int(card, "capacity_blocks", c.capacity_blocks);
        read_key(card, "image", c.image_path);
        read_key(card, "read_only", c.read_only);
        read_int(card, "seed", c.seed);
    }
    if (const YAML::Node t = root["timing"]) {
        check_keys(t, "timing", {"ncr", "nac", "program_busy", "read_buffer_blocks", "write_buffer_blocks"});
        read_int(t, "ncr", c.ncr);
        read_int(t, "nac", c.nac);
        read_int(t, "program_busy", c.program_busy);
        read_int(t, "read_buffer_blocks", c.read_buffer_blocks);
        read_int(t, "write_buffer_blocks", c.write_buffer_blocks);
    }
    if (const YAML::Node k = root["cost"]) {
        check_keys(k, "cost",
                   {"read_latency_cycles", "buffer_read_cycles", "buffer_write_cycles", "control_write_cycles",
                    "fence_penalty_cycles", "software_overhead_per_block"});
        read_opt(k, "read_latency_cycles", c.cost.read_latency_cycles);
        read_opt(k, "buffer_read_cycles", c.cost.buffer_read_cycles);
        read_opt(k, "buffer_write_cycles", c.cost.buffer_write_cycles);
        read_opt(k, "control_write_cycles", c.cost.control_write_cycles);
        read_opt(k, "fence_penalty_cycles", c.cost.fence_penalty_cycles);
        read_opt(k, "software_overhead_per_block", c.cost.software_overhead_per_block);
    }
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate(const ScenarioConfig& c) {
    if (!(c.host_freq_hz > 0))
        throw ConfigError("host_freq_hz must be positive");
    if (!(c.sd_freq_hz > 0))
        throw ConfigError("sd_freq_hz must be positive");
    if (c.sd_freq_hz > c.host_freq_hz / 2)
        throw ConfigError(strprintf("sd_freq_hz %.0f exceeds host_freq_hz / 2 (%.0f)", c.sd_freq_hz, c.host_freq_hz / 2));
    if (c.host_freq_hz / (2.0 * 0x3ff) > 400e3)
        throw ConfigError("host_freq_hz too high to derive a 400 kHz identification clock");
    if (c.block_size != card::kBlockSize)
        throw ConfigError("block_size must be 512");
    if (c.block_count > 0xffff)
        throw ConfigError("block_count exceeds 65535");
    if (c.repetitions == 0)
        throw ConfigError("repetitions must be at least 1");
    if (c.image_path.empty() && c.capacity_blocks == 0)
        throw ConfigError("capacity_blocks must be positive");
    if (c.image_path.empty() && c.lba + c.block_count > c.capacity_blocks)
        throw ConfigError("transfer extends beyond card capacity");
    if (c.read_buffer_blocks == 0 || c.write_buffer_blocks == 0)
        throw ConfigError("buffer sizes must be at least one block");
}

cost::CostModel resolve_cost(const ScenarioConfig& c) {
    auto m = cost::CostModel::for_regime(c.regime, c.host_freq_hz, c.sd_freq_hz);
    const auto& o = c.cost;
    if (o.read_latency_cycles)
        m.read_latency_cycles = *o.read_latency_cycles;
    if (o.buffer_read_cycles)
        m.buffer_read_cycles = *o.buffer_read_cycles;
    if (o.buffer_write_cycles)
        m.buffer_write_cycles = *o.buffer_write_cycles;
    if (o.control_write_cycles)
        m.control_write_cycles = *o.control_write_cycles;
    if (o.fence_penalty_cycles)
        m.fence_penalty_cycles = *o.fence_penalty_cycles;
    if (o.software_overhead_per_block)
        m.software_overhead_per_block = *o.software_overhead_per_block;
    return m;
}

void apply_overrides(ScenarioConfig& c, const CliOverrides& o) {
    if (o.regime) {
        const auto r = cost::parse_regime(*o.regime);
        if (!r)
            throw ConfigError("unknown regime '" + *o.regime + "'");
        c.regime = *r;
    }
    if (o.host_freq_hz)
        c.host_freq_hz = *o.host_freq_hz;
    if (o.sd_freq_hz)
        c.sd_freq_hz = *o.sd_freq_hz;
    if (o.blocks)
        c.block_count = *o.blocks;
    if (o.direction) {
        const auto d = parse_direction(*o.direction);
        if (!d)
            throw ConfigError("unknown direction '" + *o.direction + "'");
        c.direction = *d;
    }
}

const std::vector<ScenarioConfig>& builtin_scenarios() {
    static const std::vector<ScenarioConfig> suite = [] {
        std::vector<ScenarioConfig> v;
        auto add = [&](const char* prefix, cost::Regime regime, double host_hz, bool linux_stack) {
            for (Direction d : {Direction::Read, Direction::Write}) {
                ScenarioConfig c;
                c.name = std::string(prefix) + "-" + to_string(d);
                c.regime = regime;
                c.host_freq_hz = host_hz;
                c.direction = d;
                if (linux_stack)
                    c.cost.software_overhead_per_block = kLinuxBlockOverhead;
                v.push_back(c);
            }
        };
        add("ideal", cost::Regime::Ideal, 50e6, false);
        add("bare", cost::Regime::Bare, 50e6, false);
        add("linux-unopt", cost::Regime::LinuxUnopt, 50e6, true);
        add("linux-opt", cost::Regime::LinuxOpt, 50e6, true);
        add("scaled", cost::Regime::Bare, 500e6, false);
        return v;
    }();
    return suite;
}

std::optional<ScenarioConfig> find_builtin(std::string_view name) {
    for (const auto& c : builtin_scenarios())
        if (c.name == name)
            return c;
    return std::nullopt;
}

// -- Run ---------------------------------------------------------------------

namespace {

std::vector<std::uint8_t> pattern(std::uint64_t seed, std::size_t bytes) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> out(bytes);
    for (std::size_t i = 0; i < bytes; i += 8) {
        const std::uint64_t r = rng();
        for (std::size_t j = 0; j < 8 && i + j < bytes; ++j)
            out[i + j] = static_cast<std::uint8_t>(r >> (8 * j));
    }
    return out;
}

card::CardImage make_image(const ScenarioConfig& c) {
    if (!c.image_path.empty()) {
        // Loaded into memory so scenarios never modify the file.
        std::ifstream in(c.image_path, std::ios::binary);
        if (!in)
            throw ConfigError("cannot open card image " + c.image_path);
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (bytes.empty() || bytes.size() % card::kBlockSize != 0)
            throw ConfigError("card image size must be a non-zero multiple of 512");
        auto img = card::CardImage::in_memory(bytes.size() / card::kBlockSize);
        for (std::size_t b = 0; b < img.capacity_blocks(); ++b)
            img.store(b, std::span<const std::uint8_t, card::kBlockSize>(bytes.data() + b * card::kBlockSize,
                                                                         card::kBlockSize));
        if (c.lba + c.block_count > img.capacity_blocks())
            throw ConfigError("transfer extends beyond card capacity");
        img.set_read_only(c.read_only);
        return img;
    }
    auto img = card::CardImage::in_memory(c.capacity_blocks);
    const auto fill = pattern(c.seed ^ 0x5eed, std::size_t{c.block_count} * card::kBlockSize);
    for (std::uint32_t b = 0; b < c.block_count; ++b)
        img.store(c.lba + b, std::span<const std::uint8_t, card::kBlockSize>(fill.data() + b * card::kBlockSize,
                                                                             card::kBlockSize));
    img.set_read_only(c.read_only);
    return img;
}

host::MmioCounters operator-(const host::MmioCounters& a, const host::MmioCounters& b) {
    return {a.control_reads - b.control_reads, a.control_writes - b.control_writes,
            a.buffer_reads - b.buffer_reads, a.buffer_writes - b.buffer_writes};
}

} // namespace

std::vector<BenchResult> run_scenario(const ScenarioConfig& config, std::ostream* trace) {
    validate(config);
    auto image = make_image(config);

    SimConfig sc;
    sc.card.ncr = config.ncr;
    sc.card.nac = config.nac;
    sc.card.program_busy = config.program_busy;
    sc.controller.read_buffer_blocks = config.read_buffer_blocks;
    sc.controller.write_buffer_blocks = config.write_buffer_blocks;
    sc.cost = resolve_cost(config);

    Simulation sim(std::move(image), sc);
    if (trace)
        sim.enable_trace();
    driver::DriverConfig dc;
    dc.target_clock_hz = config.sd_freq_hz;
    driver::Driver drv(sim.bus(), dc);
    const auto info = drv.init();
    const std::uint64_t init_cycles = sim.bus().now();

    const std::size_t bytes = std::size_t{config.block_count} * card::kBlockSize;
    std::vector<Direction> dirs;
    if (config.direction == Direction::Both)
        dirs = {Direction::Write, Direction::Read};
    else
        dirs = {config.direction};

    const auto write_data = pattern(config.seed, bytes);
    std::vector<BenchResult> results;
    for (Direction d : dirs) {
        const auto counters0 = sim.controller().counters();
        const auto gated0 = sim.controller().gated_sd_clocks();
        std::uint64_t total = 0;
        bool ok = true;
        for (std::uint32_t rep = 0; rep < config.repetitions; ++rep) {
            if (d == Direction::Write) {
                total += drv.write_blocks(config.lba, config.block_count, write_data).cycles;
                for (std::uint32_t b = 0; b < config.block_count && ok; ++b) {
                    const auto blk = sim.card().image().block(config.lba + b);
                    ok = std::equal(blk.begin(), blk.end(), write_data.begin() + b * card::kBlockSize);
                }
            } else {
                std::vector<std::uint8_t> expect(bytes);
                for (std::uint32_t b = 0; b < config.block_count; ++b) {
                    const auto blk = sim.card().image().block(config.lba + b);
                    std::copy(blk.begin(), blk.end(), expect.begin() + b * card::kBlockSize);
                }
                std::vector<std::uint8_t> got(bytes);
                total += drv.read_blocks(config.lba, config.block_count, got).cycles;
                ok = ok && got == expect;
            }
        }

        BenchResult r;
        r.scenario = config.name;
        r.direction = d;
        r.bytes = bytes;
        r.host_cycles = total / config.repetitions;
        r.init_cycles = init_cycles;
        r.throughput_Bps = r.host_cycles ? static_cast<double>(r.bytes) * config.host_freq_hz /
                                               static_cast<double>(r.host_cycles)
                                         : 0.0;
        r.sd_clock_hz = info.sd_clock_hz;
        r.mmio = sim.controller().counters() - counters0;
        r.gated_sd_clocks = sim.controller().gated_sd_clocks() - gated0;
        r.data_ok = ok;
        r.config = config;
        results.push_back(std::move(r));
    }
    if (trace)
        sim.trace()->write(*trace);
    return results;
}

// -- Output ------------------------------------------------------------------

namespace {

json config_json(const ScenarioConfig& c) {
    json cost = json::object();
    auto put = [&](const char* k, const std::optional<std::uint64_t>& v) {
        if (v)
            cost[k] = *v;
    };
    put("read_latency_cycles", c.cost.read_latency_cycles);
    put("buffer_read_cycles", c.cost.buffer_read_cycles);
    put("buffer_write_cycles", c.cost.buffer_write_cycles);
    put("control_write_cycles", c.cost.control_write_cycles);
    put("fence_penalty_cycles", c.cost.fence_penalty_cycles);
    put("software_overhead_per_block", c.cost.software_overhead_per_block);
    return {
        {"name", c.name},
        {"regime", cost::to_string(c.regime)},
        {"host_freq_hz", c.host_freq_hz},
        {"sd_freq_hz", c.sd_freq_hz},
        {"block_count", c.block_count},
        {"block_size", c.block_size},
        {"direction", to_string(c.direction)},
        {"lba", c.lba},
        {"repetitions", c.repetitions},
        {"card", {{"capacity_blocks", c.capacity_blocks}, {"image", c.image_path}, {"read_only", c.read_only}, {"seed", c.seed}}},
        {"timing", {{"ncr", c.ncr}, {"nac", c.nac}, {"program_busy", c.program_busy},
                    {"read_buffer_blocks", c.read_buffer_blocks}, {"write_buffer_blocks", c.write_buffer_blocks}}},
        {"cost", cost},
    };
}

ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig c;
    c.name = j.at("name").get<std::string>();
    c.regime = cost::parse_regime(j.at("regime").get<std::string>()).value();
    c.host_freq_hz = j.at("host_freq_hz").get<double>();
    c.sd_freq_hz = j.at("sd_freq_hz").get<double>();
    c.block_count = j.at("block_count").get<std::uint32_t>();
    c.block_size = j.at("block_size").get<std::uint32_t>();
    c.direction = parse_direction(j.at("direction").get<std::string>()).value();
    c.lba = j.at("lba").get<std::uint64_t>();
    c.repetitions = j.at("repetitions").get<std::uint32_t>();
    const auto& card = j.at("card");
    c.capacity_blocks = card.at("capacity_blocks").get<std::uint64_t>();
    c.image_path = card.at("image").get<std::string>();
    c.read_only = card.at("read_only").get<bool>();
    c.seed = card.at("seed").get<std::uint64_t>();
    const auto& t = j.at("timing");
    c.ncr = t.at("ncr").get<unsigned>();
    c.nac = t.at("nac").get<unsigned>();
    c.program_busy = t.at("program_busy").get<unsigned>();
    c.read_buffer_blocks = t.at("read_buffer_blocks").get<unsigned>();
    c.write_buffer_blocks = t.at("write_buffer_blocks").get<unsigned>();
    const auto& k = j.at("cost");
    auto get = [&](const char* key, std::optional<std::uint64_t>& out) {
        if (k.contains(key))
            out = k.at(key).get<std::uint64_t>();
    };
    get("read_latency_cycles", c.cost.read_latency_cycles);
    get("buffer_read_cycles", c.cost.buffer_read_cycles);
    get("buffer_write_cycles", c.cost.buffer_write_cycles);
    get("control_write_cycles", c.cost.control_write_cycles);
    get("fence_penalty_cycles", c.cost.fence_penalty_cycles);
    get("software_overhead_per_block", c.cost.software_overhead_per_block);
    return c;
}

json result_json(const BenchResult& r) {
    return {
        {"scenario", r.scenario},
        {"direction", to_string(r.direction)},
        {"bytes", r.bytes},
        {"host_cycles", r.host_cycles},
        {"init_cycles", r.init_cycles},
        {"throughput_Bps", r.throughput_Bps},
        {"sd_clock_hz", r.sd_clock_hz},
        {"mmio", {{"control_reads", r.mmio.control_reads}, {"control_writes", r.mmio.control_writes},
                  {"buffer_reads", r.mmio.buffer_reads}, {"buffer_writes", r.mmio.buffer_writes}}},
        {"gated_sd_clocks", r.gated_sd_clocks},
        {"data_ok", r.data_ok},
        {"config", config_json(r.config)},
    };
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + "\"";
}

} // namespace

std::string to_json(const std::vector<BenchResult>& results) {
    json arr = json::array();
    for (const auto& r : results)
        arr.push_back(result_json(r));
    return json{{"results", arr}}.dump(2);
}

std::vector<BenchResult> from_json(std::string_view text) {
    const json root = json::parse(text);
    std::vector<BenchResult> out;
    for (const auto& j : root.at("results")) {
        BenchResult r;
        r.scenario = j.at("scenario").get<std::string>();
        r.direction = parse_direction(j.at("direction").get<std::string>()).value();
        r.bytes = j.at("bytes").get<std::uint64_t>();
        r.host_cycles = j.at("host_cycles").get<std::uint64_t>();
        r.init_cycles = j.at("init_cycles").get<std::uint64_t>();
        r.throughput_Bps = j.at("throughput_Bps").get<double>();
        r.sd_clock_hz = j.at("sd_clock_hz").get<double>();
        const auto& m = j.at("mmio");
        r.mmio.control_reads = m.at("control_reads").get<std::uint64_t>();
        r.mmio.control_writes = m.at("control_writes").get<std::uint64_t>();
        r.mmio.buffer_reads = m.at("buffer_reads").get<std::uint64_t>();
        r.mmio.buffer_writes = m.at("buffer_writes").get<std::uint64_t>();
        r.gated_sd_clocks = j.at("gated_sd_clocks").get<std::uint64_t>();
        r.data_ok = j.at("data_ok").get<bool>();
        r.config = config_from_json(j.at("config"));
        out.push_back(std::move(r));
    }
    return out;
}

void emit(const std::vector<BenchResult>& results, Format format, std::ostream& out) {
    switch (format) {
    case Format::Csv:
        out << kCsvHeader << '\n';
        for (const auto& r : results)
            out << csv_field(r.scenario) << ',' << to_string(r.direction) << ',' << r.bytes << ','
                << r.host_cycles << ',' << strprintf("%.3f", r.throughput_Bps) << ',' << r.gated_sd_clocks << '\n';
        return;

    case Format::Json:
        out << to_json(results) << '\n';
        return;

    case Format::Table: {
        std::size_t w = 8;
        for (const auto& r : results)
            w = std::max(w, r.scenario.size());
        out << std::left << std::setw(static_cast<int>(w)) << "scenario" << "  dir    "
            << std::right << std::setw(8) << "bytes" << std::setw(12) << "cycles" << std::setw(10) << "MB/s"
            << std::setw(12) << "init" << std::setw(10) << "gated" << std::setw(8) << "data" << '\n';
        for (const auto& r : results)
            out << std::left << std::setw(static_cast<int>(w)) << r.scenario << "  " << std::setw(5)
                << to_string(r.direction) << "  " << std::right << std::setw(8) << r.bytes << std::setw(12)
                << r.host_cycles << std::setw(10) << strprintf("%.3f", r.throughput_Bps / 1e6) << std::setw(12)
                << r.init_cycles << std::setw(10) << r.gated_sd_clocks << std::setw(8)
                << (r.data_ok ? "ok" : "BAD") << '\n';
        return;
    }
    }
}

void emit_to_file(const std::vector<BenchResult>& results, Format format, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    emit(results, format, out);
    out.flush();
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

} // namespace sdsim::bench
