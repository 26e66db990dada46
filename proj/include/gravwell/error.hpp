#pragma once

#include <stdexcept>
#include <string>

namespace gravwell {

// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (never clamped).
class DomainError : public Error {
public:
    using Error::Error;
};

// Structural problem in a comment corpus: duplicate ids, parent cycles.
class CorpusError : public Error {
public:
    using Error::Error;
};

// Stream-level read/write failure.
class IoError : public Error {
public:
    using Error::Error;
};

// Invalid or incomplete configuration, detected at startup.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A subreddit or user cannot be analysed (no authors, no embeddable text).
class AnalysisError : public Error {
public:
    using Error::Error;
};

// Statistic is undefined for the given input (n < 2, zero variance).
class UndefinedStatistic : public Error {
public:
    using Error::Error;
};

// Failure to obtain a score from a backend. `retryable` marks transient
// conditions (unparseable output, rate limits, 5xx); `raw` keeps the model text.
class ScoringError : public Error {
public:
    ScoringError(const std::string& what, bool retryable, std::string raw = {},
                 double retry_after_s = 0.0)
        : Error(what), retryable_(retryable), raw_(std::move(raw)), retry_after_s_(retry_after_s) {}

    bool retryable() const noexcept { return retryable_; }
    const std::string& raw() const noexcept { return raw_; }
    // Server-provided rate-limit hint in seconds, 0 when absent.
    double retry_after_s() const noexcept { return retry_after_s_; }

private:
    bool retryable_;
    std::string raw_;
    double retry_after_s_;
};

} // namespace gravwell
