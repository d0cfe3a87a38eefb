// Copyright 2026 The sdsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdsim/regmap.hpp"

#include "format.hpp"

namespace sdsim::host {

const std::vector<RegisterInfo>& register_table() {
    static const std::vector<RegisterInfo> table = {
        {0x00, "SDMA System Address", 4, 0x0, "reserved, reads 0 (no DMA)"},
        {0x04, "Block Size", 2, 0x0, "11:0 transfer block size; 14:12 SDMA boundary (ignored)"},
        {0x06, "Block Count", 2, 0x0, "15:0 blocks for multi-block transfers"},
        {0x08, "Argument", 4, 0x0, "31:0 command argument"},
        {0x0c, "Transfer Mode", 2, 0x0,
         "0 DMA enable (ignored); 1 block count enable; 2 Auto CMD12; 4 read; 5 multi-block"},
        {0x0e, "Command", 2, 0x0,
         "1:0 response type (00 none, 01 136, 10 48, 11 48 busy); 3 CRC check; 4 index check; "
         "5 data present; 7:6 command type; 13:8 index. Writing the upper byte issues the command"},
        {0x10, "Response 0", 4, 0x0, "R1/R3/R6/R7 payload; R2 bits 39:8"},
        {0x14, "Response 1", 4, 0x0, "R2 bits 71:40"},
        {0x18, "Response 2", 4, 0x0, "R2 bits 103:72"},
        {0x1c, "Response 3", 4, 0x0, "R2 bits 127:104; Auto CMD12 response"},
        {0x20, "Buffer Data Port", 4, 0x0, "PIO data; reads with no block ready return 0"},
        {0x24, "Present State", 4, 0x00070000 | (1u << 19),
         "0 CMD inhibit; 1 DAT inhibit; 2 DAT line active; 8 write active; 9 read active; "
         "10 buffer write enable; 11 buffer read enable; 16 card inserted; 17 card state stable; "
         "18 card detect level; 19 write enabled (not protected)"},
        {0x28, "Host Control", 1, 0x0, "1 4-bit data width"},
        {0x29, "Power Control", 1, 0x0, "0 bus power; 3:1 voltage select"},
        {0x2a, "Block Gap Control", 1, 0x0, "stored, no effect"},
        {0x2b, "Wakeup Control", 1, 0x0, "stored, no effect"},
        {0x2c, "Clock Control", 2, 0x0,
         "0 internal clock enable; 1 internal clock stable (RO); 2 SD clock enable; "
         "7:6 divisor bits 9:8; 15:8 divisor bits 7:0"},
        {0x2e, "Timeout Control", 1, 0x0, "3:0 data timeout, 2^(13+n) SD clocks"},
        {0x2f, "Software Reset", 1, 0x0, "0 reset all; 1 reset CMD line; 2 reset DAT line (self-clearing)"},
        {0x30, "Normal Interrupt Status", 2, 0x0,
         "0 command complete; 1 transfer complete; 4 buffer write ready; 5 buffer read ready; "
         "15 error interrupt (RO summary). Write 1 to clear"},
        {0x32, "Error Interrupt Status", 2, 0x0,
         "0 command timeout; 1 command CRC; 2 command end bit; 3 command index; 4 data timeout; "
         "5 data CRC; 6 data end bit; 8 Auto CMD12. Write 1 to clear"},
        {0x34, "Normal Interrupt Status Enable", 2, 0x0, "8:0 gate the matching status bits"},
        {0x36, "Error Interrupt Status Enable", 2, 0x0, "8:0 gate the matching status bits"},
        {0x38, "Normal Interrupt Signal Enable", 2, 0x0, "8:0 route status to the interrupt line"},
        {0x3a, "Error Interrupt Signal Enable", 2, 0x0, "8:0 route status to the interrupt line"},
        {0x3c, "Auto CMD12 Error Status", 2, 0x0, "1 timeout; 2 CRC; 3 end bit; 4 index"},
        {0x40, "Capabilities", 4, 0x0,
         "5:0 timeout clock MHz; 7 timeout unit MHz; 13:8 base clock MHz (0 above 63 MHz); "
         "17:16 max block 512; 24 3.3 V"},
        {0x48, "Maximum Current Capabilities", 4, 0x0, "reads 0"},
        {0xfc, "Slot Interrupt Status", 2, 0x0, "0 slot 0 interrupt line"},
        {0xfe, "Host Controller Version", 2, 0x0100, "7:0 specification 1.00; 15:8 vendor 0"},
    };
    return table;
}

std::string register_map_markdown() {
    std::string out;
    out += "# SD host controller register map\n\n";
    out += "SDHCI 1.00, PIO only, one slot. Offsets not listed read as zero and ignore writes.\n";
    out += "Accesses must be 1, 2 or 4 bytes wide and naturally aligned; anything else is a bus error.\n\n";
    out += "| Offset | Name | Width | Reset | Fields |\n";
    out += "|--------|------|-------|-------|--------|\n";
    for (const auto& r : register_table())
        out += strprintf("| 0x%02X | %s | %u | 0x%0*X | %s |\n", r.offset, r.name, r.width,
                         static_cast<int>(r.width * 2), r.reset, r.fields);
    out += "\n## Notes\n\n";
    out += "- The SD clock frequency is base / (2N) for N >= 1 and base for N = 0. N is a plain 10-bit "
           "integer; SDHCI 1.00 only defines powers of two up to 128, every such value behaves as the "
           "standard says. The extra range lets a 500 MHz system clock reach a 400 kHz identification "
           "clock and an exact 25 MHz data clock.\n";
    out += "- Internal Clock Stable sets a fixed number of system cycles (default 8) after Internal "
           "Clock Enable rises.\n";
    out += "- The read path has two 512 byte buffers. When both are full the SD clock is stopped before "
           "the next data nibble and restarts as soon as the host drains a block.\n";
    out += "- The write path has one 512 byte staging buffer; Buffer Write Ready is raised once the "
           "previous block has left the buffer.\n";
    out += "- Command timeout is a fixed 64 SD clocks without a response start bit. Timeout Control only "
           "sets the data timeout.\n";
    out += "- CRC status tokens other than 010 raise Data CRC Error.\n";
    out += "- Command writes while Command Inhibit (CMD) is set are ignored. Commands without data may be "
           "issued while a data transfer is running.\n";
    return out;
}

} // namespace sdsim::host
