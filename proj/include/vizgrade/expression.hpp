#pragma once

#include "json.hpp"
#include "vizgrade/error.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vizgrade {

/// Result of evaluating an expression.
using Value = std::variant<double, std::string>;

std::string to_string(const Value& value);
/// Numbers pass through; strings holding a finite number are converted.
std::optional<double> as_number(const Value& value);
/// JSON numbers become numbers, JSON strings become strings.
std::optional<Value> value_from_json(const nlohmann::json& value);

/// Names visible to an expression.
///
/// `values` holds scalars (resolved rubric parameters). `objects` holds JSON
/// objects reachable with dotted access (`datum.value`, `mark.height`).
/// Aggregates min/max/sum/count fold over `dataset`. Parameters that failed to
/// resolve are kept in `unresolved` so a reference to them reports why.
struct Environment {
    std::map<std::string, Value> values;
    std::map<std::string, nlohmann::json> objects;
    std::vector<nlohmann::json> dataset;
    std::map<std::string, std::string> unresolved;
};

/// Parsed expression. Grammar:
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := '-' unary | primary
///     primary := number | string | name ('.' name)* | agg '(' [name] ')' | '(' expr ')'
///
/// `+` concatenates when either side is a string; `-`, `*`, `/` need numbers
/// (numeric strings are converted).
class Expression {
public:
    struct Node;

    static Expression parse(std::string_view text);

    Value evaluate(const Environment& env) const;
    /// Every free name referenced (first path segment for dotted names,
    /// aggregate arguments excluded).
    std::set<std::string> names() const;
    const std::string& source() const { return source_; }

private:
    std::shared_ptr<const Node> root_;
    std::string source_;
};

Value eval_expression(std::string_view text, const Environment& env);

} // namespace vizgrade
