#pragma once

#include <string>

#include "adaptivefl/federation.hpp"

namespace adaptivefl {

/// A fully validated experiment configuration plus the output directory.
struct ExperimentConfigFile {
    ExperimentParams params;
    std::string out_dir = "out";
};

/// Parses the JSON experiment config. Every key is optional with a
/// documented default except "seed", which is mandatory. Unknown keys are
/// rejected; every invariant of the underlying types is revalidated here,
/// with errors naming the offending key.
ExperimentConfigFile parse_config(const std::string& path);

/// The normalized full form of a configuration (defaults filled in).
std::string config_to_json(const ExperimentConfigFile& cfg);

/// Writes the normalized config echo to out_dir/config.json; parsing the
/// echo reproduces the configuration exactly.
void write_config_echo(const ExperimentConfigFile& cfg);

}  // namespace adaptivefl
