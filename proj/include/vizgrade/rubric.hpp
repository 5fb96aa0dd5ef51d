#pragma once

#include "vizgrade/deconstruct.hpp"
#include "vizgrade/expression.hpp"
#include "vizgrade/harness.hpp"
#include "vizgrade/interact.hpp"
#include "vizgrade/scene.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vizgrade {

/// A named value taken from the student's scene (selector + attribute or
/// style) or computed from earlier parameters.
struct Parameter {
    std::string name;
    std::string selector; // scene source
    std::string attr;
    std::string style;
    std::optional<Expression> expr; // computed source
};

enum class CheckType {
    AnchorExists,
    MarkCount,
    DataCompleteness,
    ScaleKind,
    AttrMatch,
    AttrExpr,
    ColorMatch,
    TextMatch,
    Interaction,
};

std::string_view to_string(CheckType type);
std::optional<CheckType> parse_check_type(std::string_view text);

struct Check {
    std::string id;
    CheckType type = CheckType::AnchorExists;
    double points = 0;
    std::string anchor;
    std::optional<Json> expected;         // literal expectation
    std::optional<Expression> expr;       // computed expectation
    std::string field;                    // scale_kind
    std::string channel;                  // scale_kind, color_match
    std::string attr;                     // attr_match / attr_expr
    std::string style;                    // attr_match / attr_expr (computed style property)
    std::optional<double> tolerance;
    std::optional<std::string> key;       // binding key; nullopt = rubric default
    std::vector<std::string> allow_missing;
    std::optional<std::string> pattern;   // text_match regex
    std::string interaction;              // interaction id
    std::string feedback_pass;
    std::string feedback_fail;
};

struct Rubric {
    int version = 1;
    std::vector<Parameter> parameters;
    std::vector<Json> dataset;
    std::optional<std::string> dataset_key;
    std::vector<Check> checks;
    std::vector<InteractionSpec> interactions;
    double max_points = 0;
    ScaleThresholds thresholds;
    ReadinessPolicy readiness;
    std::string probe_root = "body";

    const InteractionSpec* find_interaction(const std::string& id) const;
};

/// Validates and loads a rubric document; dataset files resolve against
/// `base_dir`. Throws SchemaError, DuplicateCheckId or PointsMismatch.
Rubric load_rubric(std::string_view bytes, const std::filesystem::path& base_dir = {});
Rubric load_rubric_file(const std::filesystem::path& file);

/// Parses CSV text with a header row; numeric cells become numbers.
std::vector<Json> parse_csv(std::string_view text);

/// Builds the per-student environment: scene-sourced parameters read from the
/// first matching element, computed parameters evaluated in order. Failures
/// land in Environment::unresolved instead of throwing.
Environment resolve_parameters(const Rubric& rubric, const RenderedScene& scene);

/// Supplies a player for an interaction, or nullptr when none is available.
using PlayerFactory = std::function<std::unique_ptr<ScenePlayer>(const InteractionSpec&)>;

struct CheckContext {
    const Rubric& rubric;
    const RenderedScene& scene;
    const Environment& env;
    PlayerFactory players;
};

/// Never throws; every internal error becomes a failed result.
CheckResult run_check(const Check& check, const CheckContext& context);
std::vector<CheckResult> run_checks(const CheckContext& context);

struct Score {
    double total = 0;
    double max = 0;
    std::vector<std::pair<std::string, double>> per_check;
};

Score score(const std::vector<CheckResult>& results, double max_points);

/// Replaces {observed}, {expected}, {detail} and {id}; unknown braces stay.
std::string interpolate(const std::string& text, const CheckResult& result, const std::string& detail);

} // namespace vizgrade
