#pragma once

#include <string>

#include "config.hpp"

namespace mrh::cli {

struct CommandArgs {
    RunConfig config;
    std::string out_dir = "out";
    int threads = 0;  // 0 = one worker per sweep point up to hardware_concurrency
};

// Each command writes its outputs plus manifest.json into out_dir and prints a
// JSON summary to stdout.  Return codes: 0 success, 2 configuration error,
// 3 numerical failure (diagnostics.json is still written).
int cmd_sensitivity(const CommandArgs& args);
int cmd_relative(const CommandArgs& args);
int cmd_hedge(const CommandArgs& args);
int cmd_worstcase(const CommandArgs& args);
int cmd_sweep(const CommandArgs& args);

}  // namespace mrh::cli
