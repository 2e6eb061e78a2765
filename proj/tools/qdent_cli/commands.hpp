#pragma once

#include "config.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qdent::cli {

enum class Format { csv, json };

/// (file name, bytes) pairs; nothing touches the filesystem until write_files.
using Files = std::vector<std::pair<std::string, std::string>>;

Files cmd_entangle(const ScenarioConfig& cfg, std::optional<Format> fmt = {});
Files cmd_fig3(const ScenarioConfig& cfg, std::optional<Format> fmt = {});
Files cmd_fig4b(const ScenarioConfig& cfg, std::optional<Format> fmt = {});
Files cmd_fig5(const ScenarioConfig& cfg, std::optional<Format> fmt = {});
Files cmd_rates(const ScenarioConfig& cfg, std::optional<Format> fmt = {});

/// sub: synth, hist, g2, filter, jitter, reference.
Files cmd_timetag(const ScenarioConfig& cfg, const std::string& sub, std::optional<Format> fmt = {});

void write_files(const std::string& out_dir, const Files& files);

/// Full command line entry point; returns the process exit code
/// (0 ok, 2 config, 3 numerical, 4 model domain, 1 anything else).
int run(int argc, char** argv);

} // namespace qdent::cli
