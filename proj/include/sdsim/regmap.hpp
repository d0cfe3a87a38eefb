// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace sdsim::host {

struct RegisterInfo {
    unsigned offset;
    const char* name;
    unsigned width;
    unsigned reset;
    const char* fields;
};

/// Registers implemented by the controller, in offset order.
const std::vector<RegisterInfo>& register_table();

/// Markdown document describing the register map.
std::string register_map_markdown();

} // namespace sdsim::host
