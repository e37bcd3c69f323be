#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace qdiff::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitConfig = 2;

// Writes to a sibling temporary file and renames it over path.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct CheckResult {
    std::string suite;
    std::string check;
    double value;
    double tolerance;
    bool pass;
};

// Each command writes its artifacts under cfg.out and returns an exit code.
int cmd_simulate(const ExperimentConfig& cfg, std::ostream& log);
int cmd_figures(const ExperimentConfig& cfg, std::ostream& log);
int cmd_price(const ExperimentConfig& cfg, std::ostream& log);
int cmd_validate(const ExperimentConfig& cfg, std::ostream& log);
int cmd_coeffs(const ExperimentConfig& cfg, std::ostream& log);

// Suites run by `validate`; `only` selects one by name, empty runs the default set.
[[nodiscard]] std::vector<CheckResult> run_validation(const ExperimentConfig& cfg, const std::string& only);
[[nodiscard]] const std::vector<std::string>& validation_suites();

// Full command line entry point (argv[0] is the program name).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qdiff::cli
