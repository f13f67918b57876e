#pragma once

#include <span>
#include <string>
#include <vector>

#include "qh/sources.hpp"

namespace qh::cli {

struct XyRow {
    double x = 0.0;
    double y = 0.0;
};

struct TrajectoryBits {
    std::vector<Symbol> symbols;
    long skipped = 0; // non-numeric rows dropped
};

// One bit per consecutive position pair: 1 when |dx| >= |dy| (horizontal),
// 0 otherwise. invert flips the encoding (the Touchalytics convention).
TrajectoryBits binarize_trajectory(std::span<const XyRow> rows, bool invert = false);

struct TimingSymbols {
    std::vector<Symbol> symbols;
    int alphabet = 8;
    bool constant_input = false; // zero range, everything mapped to bin 0
};

// Min-max normalize to [0,1], then bin at uniform thresholds i/8 (floor(8v)
// clamped to 7). as_bits expands each bin into 3 bits, most significant first.
TimingSymbols binarize_timings(std::span<const double> values, bool as_bits = false);

// Symbol files are either one integer per line or a single packed digit
// string; '#' lines are comments.
std::vector<Symbol> load_symbol_file(const std::string& path);
void write_symbol_file(const std::string& path, std::span<const Symbol> symbols, bool packed,
                       const std::string& comment);

// Entry point behind the qh binary. Returns 0 on success, 2 on configuration
// errors, 1 on runtime errors.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args); // args without the program name

} // namespace qh::cli
