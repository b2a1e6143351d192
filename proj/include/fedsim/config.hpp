#pragma once
#include "fedsim/harness.hpp"

#include <string>
#include <vector>

namespace fedsim::config {

// Parse a JSON run configuration. Unknown keys are errors; missing keys
// fall back to the defaults listed by defaults_help(). `algorithm` and
// `rounds` are required.
harness::RunConfig parse_config(const std::string& path);
harness::RunConfig parse_config_text(const std::string& text, const std::string& source_name);

// Parse with `--set key=value` overrides applied on top of the file
// (dotted paths address nested objects, e.g. partition.mu=0.3).
harness::RunConfig parse_config_with_overrides(const std::string& path,
                                               const std::vector<std::string>& overrides);

std::string defaults_help();

} // namespace fedsim::config
