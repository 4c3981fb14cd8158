#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace coms {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters or shapes supplied by the caller.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite or otherwise unusable numeric input.
class InputError : public Error {
public:
    using Error::Error;
};

/// Operation called with arguments that violate its preconditions
/// (empty batch, empty sample set, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Internal inconsistency, e.g. a gradient whose shape does not match its field.
class InternalError : public Error {
public:
    using Error::Error;
};

/// Malformed JSON document. `index` names the offending record when the
/// document is an array of records.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::optional<std::size_t> index = std::nullopt)
        : Error(index ? what + " (record " + std::to_string(*index) + ")" : what), index_(index) {}

    std::optional<std::size_t> index() const noexcept { return index_; }

private:
    std::optional<std::size_t> index_;
};

/// A chain produced a non-finite iterate.
class SamplerDiverged : public Error {
public:
    explicit SamplerDiverged(std::size_t step, std::optional<std::size_t> chain = std::nullopt)
        : Error(describe(step, chain)), step_(step), chain_(chain) {}

    std::size_t step() const noexcept { return step_; }
    std::optional<std::size_t> chain() const noexcept { return chain_; }

    SamplerDiverged with_chain(std::size_t chain) const { return SamplerDiverged(step_, chain); }

private:
    static std::string describe(std::size_t step, std::optional<std::size_t> chain) {
        std::string msg = "sampler diverged at step " + std::to_string(step);
        if (chain) msg += " of chain " + std::to_string(*chain);
        return msg;
    }

    std::size_t step_;
    std::optional<std::size_t> chain_;
};

/// A negative-sample chain diverged while training; records where.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(const SamplerDiverged& cause, std::size_t epoch, std::size_t batch)
        : Error(std::string(cause.what()) + " during epoch " + std::to_string(epoch) + ", batch " +
                std::to_string(batch)),
          epoch_(epoch),
          batch_(batch) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

}  // namespace coms
