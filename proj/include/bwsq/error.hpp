#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bwsq {

// Base of every error the library throws; callers that only care about
// "something in the pipeline failed" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input file is structurally wrong (missing columns, unparseable JSON).
class SchemaError : public Error {
public:
    using Error::Error;
};

// Cross-record consistency violated (duplicate ids, dangling references).
class IntegrityError : public Error {
public:
    using Error::Error;
};

// Caller passed an argument outside the documented domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

struct RowIssue {
    std::size_t row;  // 1-based data row (header excluded)
    std::string field;
    std::string message;
};

// One or more input rows were rejected. what() lists the first few.
class RowError : public Error {
public:
    explicit RowError(std::vector<RowIssue> issues);

    const std::vector<RowIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<RowIssue> issues_;
};

class DesignError : public Error {
public:
    using Error::Error;
};

// Transport or protocol failure talking to a chat-completions endpoint.
class EndpointError : public Error {
public:
    EndpointError(const std::string& what, int status) : Error(what), status_(status) {}

    // HTTP status, or 0 when no response was received.
    int status() const noexcept { return status_; }

private:
    int status_;
};

}  // namespace bwsq
