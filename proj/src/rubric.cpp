#include "vizgrade/rubric.hpp"

#include "vizgrade/format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace vizgrade {

namespace {

constexpr std::string_view kPositionalKey = "#position";

struct TypeName {
    CheckType type;
    std::string_view name;
};

constexpr TypeName kTypeNames[] = {
    {CheckType::AnchorExists, "anchor_exists"},
    {CheckType::MarkCount, "mark_count"},
    {CheckType::DataCompleteness, "data_completeness"},
    {CheckType::ScaleKind, "scale_kind"},
    {CheckType::AttrMatch, "attr_match"},
    {CheckType::AttrExpr, "attr_expr"},
    {CheckType::ColorMatch, "color_match"},
    {CheckType::TextMatch, "text_match"},
    {CheckType::Interaction, "interaction"},
};

} // namespace

std::string_view to_string(CheckType type)
{
    for (const auto& entry : kTypeNames)
        if (entry.type == type)
            return entry.name;
    return "unknown";
}

std::optional<CheckType> parse_check_type(std::string_view text)
{
    for (const auto& entry : kTypeNames)
        if (entry.name == text)
            return entry.type;
    return std::nullopt;
}

const InteractionSpec* Rubric::find_interaction(const std::string& id) const
{
    for (const auto& spec : interactions)
        if (spec.id == id)
            return &spec;
    return nullptr;
}

// ─── CSV ────────────────────────────────────────────────────────────────────

std::vector<Json> parse_csv(std::string_view text)
{
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string cell;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (quoted) {
            if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell.push_back(ch);
            }
            continue;
        }
        if (ch == '"') {
            quoted = true;
            any = true;
        } else if (ch == ',') {
            record.push_back(std::move(cell));
            cell.clear();
            any = true;
        } else if (ch == '\n' || ch == '\r') {
            if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n')
                ++i;
            if (any || !cell.empty()) {
                record.push_back(std::move(cell));
                records.push_back(std::move(record));
            }
            record.clear();
            cell.clear();
            any = false;
        } else {
            cell.push_back(ch);
            any = true;
        }
    }
    if (any || !cell.empty()) {
        record.push_back(std::move(cell));
        records.push_back(std::move(record));
    }
    if (records.empty())
        return {};

    const auto& header = records.front();
    std::vector<Json> rows;
    for (std::size_t r = 1; r < records.size(); ++r) {
        Json row = Json::object();
        for (std::size_t c = 0; c < header.size(); ++c) {
            std::string value = c < records[r].size() ? records[r][c] : std::string();
            if (auto number = parse_double(value))
                row[header[c]] = *number;
            else
                row[header[c]] = value;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// ─── Loading ────────────────────────────────────────────────────────────────

namespace {

[[noreturn]] void schema(const std::string& why)
{
    throw Error(Errc::SchemaError, "rubric: " + why);
}

std::string text_file(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        schema("cannot open " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Expression parse_expr(const Json& value, const std::string& where)
{
    if (!value.is_string())
        schema(where + " must be an expression string");
    try {
        return Expression::parse(value.get<std::string>());
    } catch (const Error& e) {
        schema(where + ": " + e.what());
    }
}

void check_selector(const std::string& selector, const std::string& where)
{
    if (selector.empty())
        schema(where + " needs an anchor selector");
    try {
        parse_selector(selector);
    } catch (const Error& e) {
        schema(where + ": " + e.what());
    }
}

std::string opt_string(const Json& doc, const char* key)
{
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null())
        return {};
    if (!it->is_string())
        schema(std::string("'") + key + "' must be a string");
    return it->get<std::string>();
}

Check check_from_json(const Json& doc, std::size_t index)
{
    const std::string where = "checks[" + std::to_string(index) + "]";
    if (!doc.is_object())
        schema(where + " must be an object");
    Check c;
    c.id = opt_string(doc, "id");
    if (c.id.empty())
        schema(where + " has no id");
    const std::string at = "check '" + c.id + "'";

    auto type = parse_check_type(opt_string(doc, "type"));
    if (!type)
        schema(at + " has unknown type '" + opt_string(doc, "type") + "'");
    c.type = *type;

    if (!doc.contains("points") || !doc["points"].is_number())
        schema(at + " needs numeric points");
    c.points = doc["points"].get<double>();
    if (!(c.points >= 0) || !std::isfinite(c.points))
        schema(at + " has negative points");

    c.anchor = opt_string(doc, "anchor");
    if (doc.contains("expected") && !doc["expected"].is_null())
        c.expected = doc["expected"];
    if (doc.contains("expr"))
        c.expr = parse_expr(doc["expr"], at + " expr");
    c.field = opt_string(doc, "field");
    c.channel = opt_string(doc, "channel");
    c.attr = opt_string(doc, "attr");
    c.style = opt_string(doc, "style");
    if (doc.contains("tolerance")) {
        if (!doc["tolerance"].is_number() || doc["tolerance"].get<double>() < 0)
            schema(at + " tolerance must be a number >= 0");
        c.tolerance = doc["tolerance"].get<double>();
    }
    if (doc.contains("key"))
        c.key = doc["key"].is_null() ? std::string(kPositionalKey) : opt_string(doc, "key");
    if (doc.contains("allow_missing")) {
        for (const auto& v : doc["allow_missing"])
            c.allow_missing.push_back(canonical_key(v));
    }
    if (doc.contains("pattern")) {
        c.pattern = opt_string(doc, "pattern");
        try {
            std::regex check(*c.pattern);
        } catch (const std::regex_error& e) {
            schema(at + " pattern: " + e.what());
        }
    }
    c.interaction = opt_string(doc, "interaction");
    c.feedback_pass = opt_string(doc, "feedback_pass");
    c.feedback_fail = opt_string(doc, "feedback_fail");

    auto need_expectation = [&] {
        if (c.expected.has_value() == c.expr.has_value())
            schema(at + " needs exactly one of 'expected' or 'expr'");
    };
    auto need_target_attr = [&] {
        if (c.attr.empty() == c.style.empty())
            schema(at + " needs exactly one of 'attr' or 'style'");
    };

    switch (c.type) {
    case CheckType::AnchorExists:
    case CheckType::DataCompleteness:
        check_selector(c.anchor, at);
        break;
    case CheckType::MarkCount:
        check_selector(c.anchor, at);
        need_expectation();
        break;
    case CheckType::ScaleKind:
        check_selector(c.anchor, at);
        if (c.field.empty() || c.channel.empty())
            schema(at + " needs 'field' and 'channel'");
        if (!c.expected || !c.expected->is_string() || !parse_scale_kind(c.expected->get<std::string>()))
            schema(at + " needs 'expected' set to linear, log, ordinal or band");
        break;
    case CheckType::AttrMatch:
        check_selector(c.anchor, at);
        need_target_attr();
        if (!c.expected || c.expr)
            schema(at + " needs a literal 'expected'");
        break;
    case CheckType::AttrExpr:
        check_selector(c.anchor, at);
        need_target_attr();
        if (!c.expr || c.expected)
            schema(at + " needs an 'expr'");
        break;
    case CheckType::ColorMatch:
        check_selector(c.anchor, at);
        if (c.channel.empty())
            c.channel = "fill";
        need_expectation();
        if (c.expected) {
            if (!c.expected->is_string())
                schema(at + " expected color must be a string");
            try {
                parse_color(c.expected->get<std::string>());
            } catch (const Error& e) {
                schema(at + ": " + e.what());
            }
        }
        break;
    case CheckType::TextMatch:
        check_selector(c.anchor, at);
        if (int(c.pattern.has_value()) + int(c.expected.has_value()) + int(c.expr.has_value()) != 1)
            schema(at + " needs exactly one of 'pattern', 'expected' or 'expr'");
        break;
    case CheckType::Interaction:
        if (c.interaction.empty())
            schema(at + " needs an 'interaction' id");
        break;
    }
    return c;
}

Parameter parameter_from_json(const Json& doc)
{
    Parameter p;
    p.name = opt_string(doc, "name");
    if (p.name.empty())
        schema("parameter without a name");
    p.selector = opt_string(doc, "selector");
    p.attr = opt_string(doc, "attr");
    p.style = opt_string(doc, "style");
    if (doc.contains("expr"))
        p.expr = parse_expr(doc["expr"], "parameter '" + p.name + "' expr");
    const bool scene_source = !p.selector.empty();
    if (scene_source == p.expr.has_value())
        schema("parameter '" + p.name + "' needs either a selector or an expr");
    if (scene_source) {
        check_selector(p.selector, "parameter '" + p.name + "'");
        if (p.attr.empty() == p.style.empty())
            schema("parameter '" + p.name + "' needs exactly one of 'attr' or 'style'");
    }
    return p;
}

} // namespace

Rubric load_rubric(std::string_view bytes, const std::filesystem::path& base_dir)
{
    Json doc = Json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        schema("not a JSON object");

    Rubric rubric;
    try {
        if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"].get<int>() != 1)
            schema("unsupported or missing version");
        rubric.version = 1;

        std::set<std::string> names;
        for (const auto& p : doc.value("parameters", Json::array())) {
            rubric.parameters.push_back(parameter_from_json(p));
            const auto& param = rubric.parameters.back();
            if (param.expr) {
                for (const auto& ref : param.expr->names()) {
                    bool later = false;
                    for (const auto& other : doc["parameters"])
                        if (other.value("name", "") == ref && !names.count(ref))
                            later = true;
                    if (later || ref == param.name)
                        schema("parameter '" + param.name + "' refers to '" + ref + "' before it is defined");
                }
            }
            if (!names.insert(param.name).second)
                schema("duplicate parameter '" + param.name + "'");
        }

        if (doc.contains("dataset")) {
            const auto& ds = doc["dataset"];
            if (ds.is_array()) {
                rubric.dataset = ds.get<std::vector<Json>>();
            } else if (ds.is_object()) {
                if (ds.contains("rows"))
                    rubric.dataset = ds["rows"].get<std::vector<Json>>();
                else if (ds.contains("file")) {
                    auto file = base_dir / ds["file"].get<std::string>();
                    auto text = text_file(file);
                    if (file.extension() == ".csv") {
                        rubric.dataset = parse_csv(text);
                    } else {
                        Json rows = Json::parse(text, nullptr, false);
                        if (!rows.is_array())
                            schema("dataset file " + file.string() + " must hold a JSON array");
                        rubric.dataset = rows.get<std::vector<Json>>();
                    }
                } else {
                    schema("dataset needs 'rows' or 'file'");
                }
                if (ds.contains("key"))
                    rubric.dataset_key = ds["key"].get<std::string>();
            } else {
                schema("dataset must be an array or an object");
            }
        }

        for (const auto& spec : doc.value("interactions", Json::array()))
            rubric.interactions.push_back(interaction_from_json(spec));

        if (!doc.contains("checks") || !doc["checks"].is_array())
            schema("missing 'checks' array");
        std::set<std::string> ids;
        for (std::size_t i = 0; i < doc["checks"].size(); ++i) {
            Check c = check_from_json(doc["checks"][i], i);
            if (!ids.insert(c.id).second)
                throw Error(Errc::DuplicateCheckId, "check id '" + c.id + "' is used more than once");
            if (c.type == CheckType::Interaction && !rubric.find_interaction(c.interaction))
                schema("check '" + c.id + "' refers to unknown interaction '" + c.interaction + "'");
            rubric.checks.push_back(std::move(c));
        }

        const auto& scoring = doc.value("scoring", Json::object());
        if (scoring.value("mode", std::string("additive")) != "additive")
            schema("only additive scoring is supported");
        if (!scoring.contains("max_points") || !scoring["max_points"].is_number())
            schema("scoring.max_points is required");
        rubric.max_points = scoring["max_points"].get<double>();
        double sum = 0;
        for (const auto& c : rubric.checks)
            sum += c.points;
        if (std::abs(sum - rubric.max_points) > 1e-9)
            throw Error(Errc::PointsMismatch,
                "check points add up to " + format_number(sum) + " but max_points is " + format_number(rubric.max_points));

        if (doc.contains("thresholds")) {
            const auto& t = doc["thresholds"];
            rubric.thresholds.max_residual = t.value("max_residual", rubric.thresholds.max_residual);
            rubric.thresholds.band_tolerance_px = t.value("band_tolerance_px", rubric.thresholds.band_tolerance_px);
        }
        if (doc.contains("readiness")) {
            const auto& r = doc["readiness"];
            for (const auto& a : r.value("anchors", Json::array()))
                rubric.readiness.required_anchors.push_back({a.at("selector").get<std::string>(), a.value("min", 1)});
            rubric.readiness.poll_interval_ms = r.value("poll_interval", rubric.readiness.poll_interval_ms);
            rubric.readiness.timeout_ms = r.value("timeout", rubric.readiness.timeout_ms);
            rubric.readiness.stability_polls = r.value("stability_polls", rubric.readiness.stability_polls);
            rubric.readiness.validate();
        }
        rubric.probe_root = doc.value("probe_root", rubric.probe_root);
    } catch (const nlohmann::json::exception& e) {
        schema(e.what());
    }
    return rubric;
}

Rubric load_rubric_file(const std::filesystem::path& file)
{
    return load_rubric(text_file(file), file.parent_path());
}

// ─── Parameters ─────────────────────────────────────────────────────────────

Environment resolve_parameters(const Rubric& rubric, const RenderedScene& scene)
{
    Environment env;
    env.dataset = rubric.dataset;
    for (const auto& p : rubric.parameters) {
        try {
            if (p.expr) {
                env.values[p.name] = p.expr->evaluate(env);
                continue;
            }
            auto matches = query(scene, p.selector);
            if (matches.empty()) {
                env.unresolved[p.name] = "selector '" + p.selector + "' matched nothing";
                continue;
            }
            const auto& el = scene.element(matches.front());
            std::optional<std::string> raw;
            if (!p.attr.empty()) {
                if (auto it = el.attrs.find(p.attr); it != el.attrs.end())
                    raw = it->second;
            } else {
                raw = style_value(el, p.style);
            }
            if (!raw) {
                env.unresolved[p.name] = "'" + p.selector + "' has no " + (p.attr.empty() ? "style " + p.style : "attribute " + p.attr);
                continue;
            }
            std::string_view text = *raw;
            if (text.size() > 2 && text.substr(text.size() - 2) == "px")
                text.remove_suffix(2);
            if (auto number = parse_double(text))
                env.values[p.name] = *number;
            else
                env.values[p.name] = *raw;
        } catch (const Error& e) {
            env.unresolved[p.name] = e.what();
        }
    }
    return env;
}

// ─── Checks ─────────────────────────────────────────────────────────────────

std::string interpolate(const std::string& text, const CheckResult& result, const std::string& detail)
{
    const std::pair<std::string_view, const std::string*> fields[] = {
        {"{observed}", &result.observed},
        {"{expected}", &result.expected},
        {"{detail}", &detail},
        {"{id}", &result.id},
    };
    std::string out;
    for (std::size_t i = 0; i < text.size();) {
        bool replaced = false;
        for (const auto& [token, value] : fields) {
            if (text.compare(i, token.size(), token) == 0) {
                out += *value;
                i += token.size();
                replaced = true;
                break;
            }
        }
        if (!replaced)
            out.push_back(text[i++]);
    }
    return out;
}

namespace {

struct Outcome {
    bool passed = false;
    std::string observed;
    std::string expected;
    std::string detail;
};

const std::set<std::string>& geometry_attrs()
{
    static const std::set<std::string> attrs{"x", "y", "width", "height", "cx", "cy", "r", "rx", "ry", "x1", "y1", "x2", "y2"};
    return attrs;
}

std::optional<std::string> read_target(const SceneElement& el, const Check& c)
{
    if (!c.attr.empty()) {
        auto it = el.attrs.find(c.attr);
        return it == el.attrs.end() ? std::nullopt : std::optional<std::string>(it->second);
    }
    return style_value(el, c.style);
}

std::optional<double> numeric_text(std::string_view text)
{
    if (text.size() > 2 && text.substr(text.size() - 2) == "px")
        text.remove_suffix(2);
    return parse_double(text);
}

/// Numeric comparison when both sides are numbers, exact text otherwise.
bool values_agree(const std::string& observed, const Value& expected, const Check& c, std::string& expected_text)
{
    auto obs = numeric_text(observed);
    auto exp = as_number(expected);
    if (obs && exp) {
        const std::string name = c.attr.empty() ? c.style : c.attr;
        if (c.tolerance) {
            expected_text = format_number(*exp) + " ± " + format_number(*c.tolerance);
            return std::abs(*obs - *exp) <= *c.tolerance;
        }
        if (geometry_attrs().count(name)) {
            expected_text = format_number(*exp) + " ± 1";
            return std::abs(*obs - *exp) <= 1.0;
        }
        expected_text = format_number(*exp);
        return *obs == *exp || std::abs(*obs - *exp) <= 1e-6 * std::abs(*exp);
    }
    expected_text = "\"" + to_string(expected) + "\"";
    return observed == to_string(expected);
}

Json mark_object(const SceneElement& el, const RenderedScene& scene, ElementRef ref)
{
    Json obj = Json::object();
    for (const auto& [k, v] : el.attrs) {
        if (auto number = numeric_text(v))
            obj[k] = *number;
        else
            obj[k] = v;
    }
    obj["text"] = scene.text_content(ref);
    return obj;
}

std::optional<std::string> effective_key(const Check& c, const Rubric& rubric)
{
    if (c.key)
        return *c.key == kPositionalKey ? std::nullopt : std::optional<std::string>(*c.key);
    return rubric.dataset_key;
}

Outcome anchor_exists(const Check& c, const CheckContext& ctx)
{
    auto n = query(ctx.scene, c.anchor).size();
    Outcome o;
    o.passed = n > 0;
    o.observed = std::to_string(n) + " element(s) match '" + c.anchor + "'";
    o.expected = "at least one element matching '" + c.anchor + "'";
    o.detail = o.passed ? o.observed
                        : "no element matches '" + c.anchor + "'; give the graded elements this class/id so they can be found";
    return o;
}

Outcome mark_count(const Check& c, const CheckContext& ctx)
{
    auto n = query(ctx.scene, c.anchor).size();
    double want = 0;
    if (c.expected) {
        auto v = json_to_number(*c.expected);
        if (!v)
            throw Error(Errc::TypeMismatch, "expected count is not a number");
        want = *v;
    } else {
        auto v = as_number(c.expr->evaluate(ctx.env));
        if (!v)
            throw Error(Errc::TypeMismatch, "expression '" + c.expr->source() + "' is not a number");
        want = *v;
    }
    Outcome o;
    o.observed = std::to_string(n);
    o.expected = format_number(want);
    o.passed = std::abs(static_cast<double>(n) - want) < 0.5;
    o.detail = "found " + o.observed + " element(s) matching '" + c.anchor + "', expected " + o.expected;
    return o;
}

Outcome data_completeness(const Check& c, const CheckContext& ctx)
{
    auto group = extract_group(ctx.scene, c.anchor);
    auto binding = bind_data(group, ctx.rubric.dataset, effective_key(c, ctx.rubric));
    auto verdict = check_completeness(binding.report, c.allow_missing);
    Outcome o;
    o.passed = verdict.passed;
    o.observed = std::to_string(binding.report.plotted) + " of " + std::to_string(binding.report.expected) + " rows plotted, "
        + std::to_string(binding.report.extra.size()) + " extra";
    o.expected = "every data row plotted exactly once";
    o.detail = verdict.message;
    return o;
}

Outcome scale_kind(const Check& c, const CheckContext& ctx)
{
    auto group = extract_group(ctx.scene, c.anchor);
    // Without a rubric dataset the marks' own bound data stand in for it.
    std::vector<Json> rows = ctx.rubric.dataset;
    if (rows.empty())
        for (const auto& mark : group.marks)
            if (mark.datum)
                rows.push_back(*mark.datum);
    auto binding = bind_data(group, rows, effective_key(c, ctx.rubric));
    auto pairs = scale_pairs(group, binding, rows, c.field, c.channel);
    const std::string wanted = c.expected->get<std::string>();
    Outcome o;
    o.expected = wanted;
    try {
        auto model = infer_scale(pairs, c.field, c.channel, ctx.rubric.thresholds);
        o.observed = std::string(to_string(model.kind()));
        o.passed = o.observed == wanted;
        o.detail = "expected a " + wanted + " scale for " + c.field + " -> " + c.channel + ", inferred " + o.observed;
    } catch (const Error& e) {
        o.observed = std::string(errc_name(e.code()));
        o.detail = "expected a " + wanted + " scale for " + c.field + " -> " + c.channel + ", but no scale fits: " + e.detail();
    }
    return o;
}

Outcome attr_compare(const Check& c, const CheckContext& ctx)
{
    auto refs = query(ctx.scene, c.anchor);
    if (refs.empty())
        throw Error(Errc::AnchorNotFound, "no element matches '" + c.anchor + "'");
    const std::string name = c.attr.empty() ? "style " + c.style : c.attr;
    Outcome o;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto& el = ctx.scene.element(refs[i]);
        auto observed = read_target(el, c);
        Value expected;
        if (c.type == CheckType::AttrMatch) {
            auto v = value_from_json(*c.expected);
            if (!v)
                throw Error(Errc::TypeMismatch, "expected value must be a number or string");
            expected = *v;
        } else {
            Environment local = ctx.env;
            if (el.datum)
                local.objects["datum"] = *el.datum;
            local.objects["mark"] = mark_object(el, ctx.scene, refs[i]);
            expected = c.expr->evaluate(local);
        }
        std::string expected_text;
        if (!observed) {
            values_agree("", expected, c, expected_text);
            o.observed = "missing";
            o.expected = expected_text;
            o.detail = "element " + std::to_string(i + 1) + " of '" + c.anchor + "' has no " + name;
            return o;
        }
        if (!values_agree(*observed, expected, c, expected_text)) {
            o.observed = *observed;
            o.expected = expected_text;
            o.detail = "element " + std::to_string(i + 1) + " of '" + c.anchor + "': " + name + " is " + *observed
                + ", expected " + expected_text;
            return o;
        }
        o.expected = expected_text;
    }
    o.passed = true;
    o.observed = "all " + std::to_string(refs.size()) + " element(s) agree";
    o.detail = o.observed;
    return o;
}

Outcome color_match(const Check& c, const CheckContext& ctx)
{
    auto refs = query(ctx.scene, c.anchor);
    if (refs.empty())
        throw Error(Errc::AnchorNotFound, "no element matches '" + c.anchor + "'");
    std::string spec = c.expected ? c.expected->get<std::string>() : to_string(c.expr->evaluate(ctx.env));
    Color want = parse_color(spec);
    const double tol = c.tolerance.value_or(0.0);
    Outcome o;
    o.expected = to_string(want) + (tol > 0 ? " ± " + format_number(tol) : "");
    for (std::size_t i = 0; i < refs.size(); ++i) {
        auto raw = style_value(ctx.scene.element(refs[i]), c.channel);
        if (!raw) {
            o.observed = "missing";
            o.detail = "element " + std::to_string(i + 1) + " of '" + c.anchor + "' has no " + c.channel;
            return o;
        }
        Color got;
        try {
            got = parse_color(*raw);
        } catch (const Error&) {
            o.observed = *raw;
            o.detail = "element " + std::to_string(i + 1) + " of '" + c.anchor + "' has " + c.channel + " '" + *raw
                + "', expected " + to_string(want);
            return o;
        }
        bool ok = std::abs(got.r - want.r) <= tol && std::abs(got.g - want.g) <= tol && std::abs(got.b - want.b) <= tol
            && std::abs(got.alpha - want.alpha) * 255.0 <= tol + 1e-9;
        if (!ok) {
            o.observed = to_string(got);
            o.detail = "element " + std::to_string(i + 1) + " of '" + c.anchor + "' has " + c.channel + " " + to_string(got)
                + ", expected " + to_string(want);
            return o;
        }
    }
    o.passed = true;
    o.observed = "all " + std::to_string(refs.size()) + " element(s) are " + to_string(want);
    o.detail = o.observed;
    return o;
}

std::string trimmed(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

Outcome text_match(const Check& c, const CheckContext& ctx)
{
    auto refs = query(ctx.scene, c.anchor);
    if (refs.empty())
        throw Error(Errc::AnchorNotFound, "no element matches '" + c.anchor + "'");
    Outcome o;
    std::optional<std::regex> re;
    std::string want;
    if (c.pattern) {
        re.emplace(*c.pattern);
        o.expected = "/" + *c.pattern + "/";
    } else {
        want = c.expected ? to_string(value_from_json(*c.expected).value_or(Value{c.expected->dump()}))
                          : to_string(c.expr->evaluate(ctx.env));
        o.expected = "\"" + want + "\"";
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
        std::string text = trimmed(ctx.scene.text_content(refs[i]));
        bool ok = re ? std::regex_search(text, *re) : text == trimmed(want);
        if (!ok) {
            o.observed = "\"" + text + "\"";
            o.detail = "text of element " + std::to_string(i + 1) + " of '" + c.anchor + "' is " + o.observed + ", expected "
                + o.expected;
            return o;
        }
    }
    o.passed = true;
    o.observed = "all " + std::to_string(refs.size()) + " element(s) match";
    o.detail = o.observed;
    return o;
}

} // namespace

CheckResult run_check(const Check& check, const CheckContext& ctx)
{
    CheckResult result;
    result.id = check.id;
    result.max_points = check.points;
    std::string detail;
    try {
        if (check.type == CheckType::Interaction) {
            const InteractionSpec* spec = ctx.rubric.find_interaction(check.interaction);
            std::unique_ptr<ScenePlayer> player = spec && ctx.players ? ctx.players(*spec) : nullptr;
            if (!spec || !player) {
                result.observed = "not run";
                result.expected = "interaction '" + check.interaction + "'";
                detail = "interaction '" + check.interaction + "' could not be run: no player or recording available";
            } else {
                CheckResult r = grade_interaction(*spec, *player, ctx.env);
                result.passed = r.passed;
                result.observed = r.observed;
                result.expected = r.expected;
                detail = r.feedback;
            }
        } else {
            Outcome o;
            switch (check.type) {
            case CheckType::AnchorExists: o = anchor_exists(check, ctx); break;
            case CheckType::MarkCount: o = mark_count(check, ctx); break;
            case CheckType::DataCompleteness: o = data_completeness(check, ctx); break;
            case CheckType::ScaleKind: o = scale_kind(check, ctx); break;
            case CheckType::AttrMatch:
            case CheckType::AttrExpr: o = attr_compare(check, ctx); break;
            case CheckType::ColorMatch: o = color_match(check, ctx); break;
            case CheckType::TextMatch: o = text_match(check, ctx); break;
            case CheckType::Interaction: break;
            }
            result.passed = o.passed;
            result.observed = o.observed;
            result.expected = o.expected;
            detail = o.detail;
        }
    } catch (const Error& e) {
        result.passed = false;
        if (result.observed.empty())
            result.observed = std::string(errc_name(e.code()));
        switch (e.code()) {
        case Errc::AnchorNotFound:
            detail = e.detail() + "; give the graded elements this class/id so they can be found";
            break;
        case Errc::ParameterUnresolvable:
            detail = "could not determine the expected value because parameter " + e.detail();
            break;
        default:
            detail = e.what();
        }
    } catch (const std::exception& e) {
        result.passed = false;
        result.observed = "error";
        detail = std::string("internal error: ") + e.what();
    }

    result.points_awarded = result.passed ? check.points : 0.0;
    const std::string& tmpl = result.passed ? check.feedback_pass : check.feedback_fail;
    result.feedback = tmpl.empty() ? detail : interpolate(tmpl, result, detail);
    return result;
}

std::vector<CheckResult> run_checks(const CheckContext& context)
{
    std::vector<CheckResult> out;
    out.reserve(context.rubric.checks.size());
    for (const auto& check : context.rubric.checks)
        out.push_back(run_check(check, context));
    return out;
}

Score score(const std::vector<CheckResult>& results, double max_points)
{
    Score s;
    s.max = max_points;
    for (const auto& r : results) {
        s.total += r.points_awarded;
        s.per_check.emplace_back(r.id, r.points_awarded);
    }
    return s;
}

} // namespace vizgrade
