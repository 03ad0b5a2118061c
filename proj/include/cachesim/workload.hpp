#pragma once

// Synthetic request traces and trace-file ingestion.

#include <cstdint>
#include <string>
#include <string_view>

#include "cachesim/trace.hpp"

namespace cachesim {

struct WorkloadSpec {
    enum class Kind { Uniform, Zipf, Cyclic, DetKiller, File };

    Kind kind = Kind::Uniform;
    std::uint64_t pages = 1;
    double exponent = 1.0;
    std::uint64_t capacity = 1;        // det-killer: cache size of the target
    std::string target = "lru";        // det-killer: deterministic target policy
    std::string path;                  // file
    Time length = 0;
    std::uint64_t seed = 0;

    /// "uniform(pages)", "zipf(pages,exponent)", "cyclic(pages)",
    /// "det-killer(k)" or "det-killer(k,target)", "file(path)".
    static WorkloadSpec parse(std::string_view text, Time length = 0, std::uint64_t seed = 0);
    std::string to_string() const;
    /// Throws std::invalid_argument on out-of-range parameters.
    void validate() const;
};

/// Deterministic for a fixed spec. For det-killer the target policy is run
/// in lockstep and every request after the first k + 1 asks for the page the
/// target evicted one step earlier.
RequestTrace generate(const WorkloadSpec& spec);

}  // namespace cachesim
