#include "cachesim/util.hpp"

#include <array>
#include <cmath>

namespace cachesim {

std::string_view trim(std::string_view text) {
    constexpr std::string_view ws = " \t\r\n";
    const auto first = text.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(ws);
    return text.substr(first, last - first + 1);
}

CallExpr parse_call(std::string_view text) {
    text = trim(text);
    CallExpr call;
    const auto open = text.find('(');
    if (open == std::string_view::npos) {
        call.name = std::string(text);
        return call;
    }
    if (text.back() != ')') throw std::invalid_argument("unbalanced parentheses in '" + std::string(text) + "'");
    call.name = std::string(trim(text.substr(0, open)));
    auto body = text.substr(open + 1, text.size() - open - 2);
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i == body.size() || (body[i] == ',' && depth == 0)) {
            auto arg = trim(body.substr(start, i - start));
            if (!arg.empty() || i != body.size() || !call.args.empty()) call.args.emplace_back(arg);
            start = i + 1;
        } else if (body[i] == '(') {
            ++depth;
        } else if (body[i] == ')') {
            if (--depth < 0) throw std::invalid_argument("unbalanced parentheses in '" + std::string(text) + "'");
        }
    }
    if (depth != 0) throw std::invalid_argument("unbalanced parentheses in '" + std::string(text) + "'");
    return call;
}

double parse_double(std::string_view text, std::string_view what) {
    text = trim(text);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw std::invalid_argument("invalid number for " + std::string(what) + ": '" + std::string(text) + "'");
    }
    return value;
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
    auto finalize = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = finalize(master);
    for (auto c : coords) h = finalize(h ^ finalize(c));
    return h;
}

}  // namespace cachesim
