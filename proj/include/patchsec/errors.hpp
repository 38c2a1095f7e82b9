#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace patchsec {

/// Invalid or inconsistent model input. where() is the dotted path of the
/// offending field ("servers.web.hw_mttf", "vulnerabilities[3]"), possibly empty.
class ModelError : public std::runtime_error {
public:
    ModelError(std::string where, const std::string& what)
        : std::runtime_error(where.empty() ? what : where + ": " + what)
        , where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

/// Syntax error in a guard expression or a textual net. offset() is a byte
/// offset into the text handed to the parser.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, const std::string& what)
        : std::runtime_error("offset " + std::to_string(offset) + ": " + what)
        , offset_(offset) {}

    ParseError(std::size_t offset, std::string prefix, const std::string& what)
        : std::runtime_error(std::move(prefix) + ": " + what)
        , offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// State-space generation or numerical solution failed.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace patchsec
