#pragma once

#include <string>

#include "stereosr/degradation.hpp"
#include "stereosr/generator.hpp"

namespace stereosr {

/// Key/value config text: one `key = value` per line, `#` comments,
/// ranges as two whitespace-separated numbers.
DegradationConfig parse_degradation_config(const std::string& text);
DegradationConfig load_degradation_config(const std::string& path);
std::string serialize(const DegradationConfig& cfg);

GeneratorConfig parse_generator_config(const std::string& text);
GeneratorConfig load_generator_config(const std::string& path);
std::string serialize(const GeneratorConfig& cfg);

}  // namespace stereosr
