#pragma once

// Small text and seeding helpers shared by the modules and the CLI.

#include <charconv>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cachesim {

std::string_view trim(std::string_view text);

/// "name(arg, arg(x, y), ...)" split on top-level commas. A bare "name"
/// yields no arguments.
struct CallExpr {
    std::string name;
    std::vector<std::string> args;
};
CallExpr parse_call(std::string_view text);

double parse_double(std::string_view text, std::string_view what);

template <typename Int>
Int parse_int(std::string_view text, std::string_view what) {
    text = trim(text);
    Int value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument("invalid integer for " + std::string(what) + ": '" +
                                    std::string(text) + "'");
    }
    return value;
}

/// Shortest representation that round-trips.
std::string format_double(double value);

/// splitmix64 finalizer folded over a list of coordinates; used to give every
/// run of a sweep its own reproducible stream.
std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords);

}  // namespace cachesim
