#ifndef TADKIT_ERRORS_HPP
#define TADKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tadkit {

// Process exit codes used by the CLI: 0 success, 2 config, 3 data, 4 numeric.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

}  // namespace tadkit

#endif
