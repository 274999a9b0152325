#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace runsys
{

// Scenario, protocol or context is malformed (bad parameters, undefined protocol output,
// missing fault flags, schema violations).
class config_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Generation exceeded the configured state budget.
class resource_error : public std::runtime_error
{
    std::size_t _reached;

public:
    resource_error( const std::string& what, std::size_t reached )
            : std::runtime_error( what + " (reached " + std::to_string( reached ) + ")" ), _reached{ reached }
    {
    }

    [[nodiscard]] std::size_t reached() const { return _reached; }
};

// A game or state-space model violates its structural invariants.
class model_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace runsys
