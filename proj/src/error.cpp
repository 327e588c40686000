#include "lideval/error.hpp"

namespace lideval {

namespace {
std::string join_issues(const std::vector<ConfigError::Issue>& issues)
{
    std::string msg = std::to_string(issues.size()) + " configuration error(s)";
    for (const auto& i : issues) {
        msg += "\n  " + i.where + ": " + i.message;
    }
    return msg;
}
} // namespace

ConfigError::ConfigError(std::vector<Issue> issues)
    : ValidationError(join_issues(issues))
    , issues_(std::move(issues))
{
}

StageError::StageError(std::string stage, const std::string& what)
    : std::runtime_error("stage '" + stage + "' failed: " + what)
    , stage_(std::move(stage))
{
}

} // namespace lideval
