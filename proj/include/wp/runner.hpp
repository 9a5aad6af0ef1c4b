#pragma once

#include <string>

#include "wp/config.hpp"

namespace wp {

struct RunOverrides {
    std::string out_dir;  // --out beats WAVEPROBE_OUT beats run.out
    bool have_seed = false;
    std::uint64_t seed = 0;
    int workers = -1;  // -1 = keep config
    bool force = false;
};

// runs one named stage; writes outputs and the manifest under the resolved
// output directory; throws wp::Error on failure
void run_subcommand(const std::string& name, const Config& cfg, const RunOverrides& ov);

bool is_known_subcommand(const std::string& name);

}  // namespace wp
