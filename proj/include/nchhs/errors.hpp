#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nchhs {

/// One validation failure, located by section/key/line when known.
struct ConfigViolation {
    std::string section;
    std::string key;
    int line = 0;
    std::string message;

    std::string str() const {
        std::string s;
        if (!section.empty()) s += "[" + section + "] ";
        if (!key.empty()) s += key + ": ";
        s += message;
        if (line > 0) s += " (line " + std::to_string(line) + ")";
        return s;
    }
};

/// Thrown by config parsing/validation; carries the complete violation list.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<ConfigViolation> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}
    explicit ConfigError(const std::string& msg)
        : ConfigError(std::vector<ConfigViolation>{{"", "", 0, msg}}) {}

    const std::vector<ConfigViolation>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<ConfigViolation>& vs) {
        std::string s = "config error";
        for (const auto& v : vs) s += "\n  " + v.str();
        return s;
    }
    std::vector<ConfigViolation> violations_;
};

/// Iterative solver did not reach its tolerance (or a law sanity check failed).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace nchhs
