#pragma once

#include "gaitbci/decoder.hpp"
#include "gaitbci/plant.hpp"
#include "gaitbci/signal.hpp"

#include <string>

namespace gaitbci {

// JSON forms of the stage configurations. Parsers start from the defaults,
// accept any subset of fields, and reject unknown fields or wrong types with
// a ConfigError that names the field.

std::string synth_config_json(const SynthConfig& cfg);
SynthConfig parse_synth_config(const std::string& json_text);

std::string decoder_config_json(const DecoderConfig& cfg);
DecoderConfig parse_decoder_config(const std::string& json_text);

std::string plant_config_json(const PlantConfig& cfg);
PlantConfig parse_plant_config(const std::string& json_text);

} // namespace gaitbci
