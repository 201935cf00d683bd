#pragma once

#include <filesystem>
#include <ostream>
#include <string>

namespace dlmp::acceptance {

struct Config {
    std::filesystem::path fixtures_dir;
    std::string reference_solver; ///< command for the cross-check backend
    long mc_samples = 100000;
    uint64_t mc_seed = 20240817;
};

/// Runs every acceptance criterion, printing one pass/fail line per
/// criterion. Returns the number of failed criteria.
int run_all(const Config& config, std::ostream& out);

} // namespace dlmp::acceptance
