#pragma once

#include <stdexcept>
#include <string>

namespace hyperlap {

/** @brief Input outside the validated domain of an operation (CLI exit code 2). */
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/** @brief A size or budget limit was exceeded (CLI exit code 3). */
class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& what, double partial = 0.0)
        : std::runtime_error(what), partial_estimate(partial) {}
    double partial_estimate;
};

/** @brief A numerical tolerance could not be met (CLI exit code 4). */
class AccuracyError : public std::runtime_error {
public:
    AccuracyError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved error " + std::to_string(achieved) + ")"),
          achieved_error(achieved) {}
    double achieved_error;
};

}  // namespace hyperlap
