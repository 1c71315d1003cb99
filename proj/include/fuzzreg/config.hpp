#pragma once

#include <map>
#include <optional>
#include <string>

#include "fuzzreg/registration.hpp"

namespace fuzzreg {

enum class RunMode { Rigid, Similarity, Rays };

std::string to_string(RunMode m);

// Parameter bundle read from "key = value" text; command-line flags go
// through set() after the file so they win. Unknown keys are rejected.
class RunConfig {
public:
    static RunConfig from_file(const std::string& path);  // ParseError with line numbers
    static const std::map<std::string, std::string>& known_keys();  // key -> description

    // Throws InvalidParameter for unknown keys or malformed values.
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;

    RunMode mode() const;
    // Preset for the mode (default_options / default_ray_options) with every
    // set key applied, then validated.
    RegistrationOptions registration_options() const;
    int voxel_resolution() const;  // default 64

    // Effective registration parameters plus every explicitly set key.
    std::map<std::string, std::string> echo() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace fuzzreg
