#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rhlab::experiment {

enum ExitCode { ok = 0, config_error = 2, numerical_failure = 3 };

struct RunOptions {
    std::string subcommand;               // must match the config's `experiment` when both are given
    std::optional<std::uint64_t> seed;    // overrides the config seed
    std::string out_dir = ".";
};

struct RunResult {
    int exit_code = ok;
    std::string message;
    std::vector<std::string> files;  // artifacts written, manifest last
};

std::vector<std::string> experiment_names();

// Parses the config, dispatches to the module pipeline and writes <experiment>.csv,
// optionally <experiment>.json, and manifest.json into out_dir (write-then-rename).
// Never throws for config or numerical problems; they are reported through exit_code.
RunResult run_experiment(const std::string& config_path, const RunOptions& opt = {});
// `source` names the config in the manifest; relative model paths resolve against its directory.
RunResult run_experiment_text(const std::string& config_text, const RunOptions& opt = {},
                              const std::string& source = "<string>");

// 64-bit FNV-1a, lowercase hex.
std::string fnv1a_hex(const std::string& bytes);
// RFC 4180 field quoting.
std::string csv_field(const std::string& s);

}  // namespace rhlab::experiment
