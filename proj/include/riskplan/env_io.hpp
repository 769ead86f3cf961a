// Environment JSON files: bounds plus obstacle polynomials with their
// parameter distributions. Parsing is strict — unknown fields are rejected
// and errors carry JSON paths.
#pragma once

#include <string>

#include "riskplan/environment.hpp"

namespace riskplan {

class EnvParseError : public std::runtime_error {
public:
    EnvParseError(const std::string& path, const std::string& message)
        : std::runtime_error(path + ": " + message) {}
};

Environment load_env(const std::string& file);
Environment parse_env_json(const std::string& text);

void save_env(const Environment& env, const std::string& file);
std::string env_to_json(const Environment& env);

}  // namespace riskplan
