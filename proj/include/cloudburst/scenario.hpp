#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cloudburst/market.hpp"
#include "cloudburst/photon.hpp"
#include "cloudburst/provisioner.hpp"
#include "cloudburst/workload.hpp"

namespace cloudburst {

struct WorkloadSpec {
    RuntimeModel runtime;
    std::uint64_t n_jobs = 0;
    double epilogue_s = 5.0;
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 1;
    double horizon_s = 0.0;
    double metric_period_s = 60.0;
    Catalog catalog;
    Plan plan;
    std::vector<FleetSpec> onprem_baseline;
    WorkloadSpec workload;
    FetchModel fetch;
};

// Reads a whole file; throws ConfigError if it cannot be read.
std::string read_text_file(const std::filesystem::path& path);

// Throws ParseError with 1-based line and column on malformed input.
nlohmann::json parse_json_text(std::string_view text);

// Every problem found in the document; empty means it builds.
std::vector<std::string> validate_scenario(const nlohmann::json& doc);

// Throws ConfigError carrying all diagnostics if the document is invalid.
Scenario build_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

// Multiplies fleet targets, capacity caps, baseline sizes and the job
// count by k, rounding to the nearest integer.
void apply_scale(Scenario& scenario, double k);

// Slash-separated path into the document; `*` matches every element of an
// array or object. Leaves must be numbers. Returns the number of values set.
std::size_t set_numeric_path(nlohmann::json& doc, std::string_view path, double value);
std::size_t count_numeric_path(const nlohmann::json& doc, std::string_view path);

struct PhotonConfig {
    photon::IceModel ice = photon::IceModel::uniform(0.01, 0.05, 500.0, -500.0);
    std::vector<photon::Dom> doms;
    photon::Source source;
    std::uint64_t photons = 100000;
    std::uint64_t seed = 1;
    std::size_t max_steps = photon::kDefaultMaxSteps;
};

PhotonConfig build_photon_config(const nlohmann::json& doc);
PhotonConfig load_photon_config(const std::filesystem::path& path);

}  // namespace cloudburst
