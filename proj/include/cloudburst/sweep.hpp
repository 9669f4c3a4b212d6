#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloudburst/accounting.hpp"

namespace cloudburst {

struct SweepOptions {
    std::string param;  // slash path, see set_numeric_path
    std::vector<double> values;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path out;
    double scale = 1.0;
    unsigned jobs = 1;
};

struct SweepRow {
    double value = 0.0;
    std::uint64_t seed = 0;
    std::filesystem::path dir;
    Summary summary;
};

// One isolated run per (value, seed), written to its own directory under
// `out`, plus out/sweep.csv. Every variant is built and validated before
// the first run starts.
std::vector<SweepRow> run_sweep(const nlohmann::json& base, const SweepOptions& options);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace cloudburst
