#include "oracles.hpp"

#include "vizgrade/format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace vizgrade::testing {

namespace {

template <class T>
const T& pick(Rng& rng, const std::vector<T>& items)
{
    return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

bool coin(Rng& rng, double p)
{
    return std::bernoulli_distribution(p)(rng);
}

int uniform_int(Rng& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

const std::vector<std::string> kTags{"g", "rect", "circle", "text", "div", "span"};
const std::vector<std::string> kClasses{"a", "b", "c", "d"};
const std::vector<std::string> kIds{"x", "y", "z"};
const std::vector<std::string> kAttrs{"data-k", "fill"};

std::vector<std::string> split_ws(const std::string& s)
{
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;)
        out.push_back(w);
    return out;
}

bool compound_matches(const SceneElement& el, const NaiveCompound& c)
{
    if (!c.tag.empty() && c.tag != "*" && el.tag != c.tag)
        return false;
    auto attr = [&](const std::string& name) -> const std::string* {
        auto it = el.attrs.find(name);
        return it == el.attrs.end() ? nullptr : &it->second;
    };
    if (!c.id.empty()) {
        const std::string* id = attr("id");
        if (!id || *id != c.id)
            return false;
    }
    if (!c.classes.empty()) {
        const std::string* cls = attr("class");
        auto have = cls ? split_ws(*cls) : std::vector<std::string>{};
        for (const auto& want : c.classes)
            if (std::find(have.begin(), have.end(), want) == have.end())
                return false;
    }
    for (const auto& a : c.attrs)
        if (!attr(a))
            return false;
    return true;
}

bool matches_prefix(const RenderedScene& scene, ElementRef ref, const NaiveSelector& sel, std::size_t last)
{
    if (!compound_matches(scene.element(ref), sel[last]))
        return false;
    if (last == 0)
        return true;
    for (ElementRef a : scene.ancestors(ref))
        if (matches_prefix(scene, a, sel, last - 1))
            return true;
    return false;
}

SceneElement random_element(Rng& rng, int& budget, int depth)
{
    SceneElement el;
    el.tag = pick(rng, kTags);
    std::vector<std::string> classes;
    for (int i = uniform_int(rng, 0, 3); i > 0; --i)
        classes.push_back(pick(rng, kClasses));
    if (!classes.empty()) {
        std::string cls;
        for (const auto& c : classes)
            cls += (coin(rng, 0.2) ? "  " : " ") + c;
        el.attrs["class"] = cls.substr(1);
    }
    if (coin(rng, 0.25))
        el.attrs["id"] = pick(rng, kIds);
    for (const auto& a : kAttrs)
        if (coin(rng, 0.2))
            el.attrs[a] = "v";
    while (budget > 0 && depth < 6 && coin(rng, 0.6)) {
        --budget;
        el.children.push_back(random_element(rng, budget, depth + 1));
    }
    return el;
}

} // namespace

// ─── Selectors ──────────────────────────────────────────────────────────────

std::string render_selector(const NaiveSelector& selector)
{
    std::string out;
    for (const auto& c : selector) {
        if (!out.empty())
            out += ' ';
        out += c.tag;
        for (const auto& cls : c.classes)
            out += "." + cls;
        if (!c.id.empty())
            out += "#" + c.id;
        for (const auto& a : c.attrs)
            out += "[" + a + "]";
    }
    return out;
}

bool naive_matches(const RenderedScene& scene, ElementRef ref, const NaiveSelector& selector)
{
    return !selector.empty() && matches_prefix(scene, ref, selector, selector.size() - 1);
}

std::vector<ElementRef> naive_query(const RenderedScene& scene, const NaiveSelector& selector)
{
    std::vector<ElementRef> out;
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (naive_matches(scene, ElementRef{i}, selector))
            out.push_back(ElementRef{i});
    return out;
}

RenderedScene random_scene(Rng& rng, int max_elements)
{
    int budget = max_elements - 1;
    SceneElement root = random_element(rng, budget, 0);
    root.tag = "svg";
    return RenderedScene(1, "about:blank", {800, 600}, std::move(root));
}

NaiveSelector random_selector(Rng& rng)
{
    NaiveSelector sel(static_cast<std::size_t>(uniform_int(rng, 1, 3)));
    for (auto& c : sel) {
        double r = uniform(rng, 0, 1);
        if (r < 0.4)
            c.tag = pick(rng, kTags);
        else if (r < 0.5)
            c.tag = "*";
        for (int i = uniform_int(rng, 0, 2); i > 0; --i)
            c.classes.push_back(pick(rng, kClasses));
        if (coin(rng, 0.2))
            c.id = pick(rng, kIds);
        if (coin(rng, 0.2))
            c.attrs.push_back(pick(rng, kAttrs));
        if (c.tag.empty() && c.classes.empty() && c.id.empty() && c.attrs.empty())
            c.tag = "*";
    }
    return sel;
}

// ─── Expressions ────────────────────────────────────────────────────────────

namespace {

const std::vector<double> kNumbers{0, 1, 2, 3, 0.5, 0.25, 3.25, 7, 10, 12.5, 100, 0.1, 1000};
const std::vector<std::string> kStrings{"a", "bar", "12", "3.5", "", "x y", "-4"};
const std::vector<std::string> kNames{
    "w", "h", "label", "n", "zero", "datum.value", "datum.name", "datum.nested.x", "datum.nested", "datum.missing",
    "ghost", "nope", "mark.height"};
const std::vector<std::string> kAggregates{"count()", "sum(value)", "min(value)", "max(value)", "sum(name)", "min(missing)"};

ExprPtr leaf(Rng& rng)
{
    auto n = std::make_shared<ExprNode>();
    double r = uniform(rng, 0, 1);
    if (r < 0.4) {
        n->kind = ExprNode::Kind::Number;
        n->number = pick(rng, kNumbers);
    } else if (r < 0.55) {
        n->kind = ExprNode::Kind::String;
        n->text = pick(rng, kStrings);
    } else if (r < 0.85) {
        n->kind = ExprNode::Kind::Name;
        n->text = pick(rng, kNames);
    } else {
        n->kind = ExprNode::Kind::Aggregate;
        n->text = pick(rng, kAggregates);
    }
    return n;
}

int precedence(const ExprNode& n)
{
    switch (n.kind) {
    case ExprNode::Kind::Binary:
        return (n.op == '+' || n.op == '-') ? 1 : 2;
    case ExprNode::Kind::Negate:
        return 3;
    default:
        return 4;
    }
}

std::string spaces(Rng& rng)
{
    return coin(rng, 0.3) ? " " : "";
}

std::string render(const ExprNode& n, Rng& rng)
{
    std::string out;
    switch (n.kind) {
    case ExprNode::Kind::Number:
        out = format_number(n.number);
        break;
    case ExprNode::Kind::String:
        out = coin(rng, 0.5) ? "'" + n.text + "'" : "\"" + n.text + "\"";
        break;
    case ExprNode::Kind::Name:
    case ExprNode::Kind::Aggregate:
        out = n.text;
        break;
    case ExprNode::Kind::Group:
        out = "(" + spaces(rng) + render(*n.lhs, rng) + spaces(rng) + ")";
        break;
    case ExprNode::Kind::Negate: {
        std::string inner = render(*n.lhs, rng);
        if (precedence(*n.lhs) < 3)
            inner = "(" + inner + ")";
        out = "-" + spaces(rng) + inner;
        break;
    }
    case ExprNode::Kind::Binary: {
        const int p = precedence(n);
        std::string l = render(*n.lhs, rng);
        std::string r = render(*n.rhs, rng);
        if (precedence(*n.lhs) < p)
            l = "(" + l + ")";
        if (precedence(*n.rhs) <= p)
            r = "(" + r + ")";
        out = l + (coin(rng, 0.5) ? " " : "") + n.op + (coin(rng, 0.5) ? " " : "") + r;
        break;
    }
    }
    return out;
}

OracleResult lookup(const std::string& name, const Environment& env)
{
    if (auto it = env.values.find(name); it != env.values.end())
        return it->second;
    auto parts = std::vector<std::string>{};
    std::string cur;
    for (char ch : name) {
        if (ch == '.') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);
    if (auto it = env.objects.find(parts[0]); it != env.objects.end()) {
        const Json* node = &it->second;
        for (std::size_t i = 1; i < parts.size(); ++i) {
            if (!node->is_object() || !node->contains(parts[i]))
                return Errc::UnboundName;
            node = &(*node)[parts[i]];
        }
        if (node->is_number())
            return Value{node->get<double>()};
        if (node->is_string())
            return Value{node->get<std::string>()};
        if (node->is_boolean())
            return Value{node->get<bool>() ? 1.0 : 0.0};
        return Errc::TypeMismatch;
    }
    if (env.unresolved.count(parts[0]))
        return Errc::ParameterUnresolvable;
    return Errc::UnboundName;
}

std::optional<double> coerce(const Value& v)
{
    if (auto d = std::get_if<double>(&v))
        return *d;
    const std::string& s = std::get<std::string>(v);
    if (s.empty() || std::isspace(static_cast<unsigned char>(s.front())))
        return std::nullopt;
    char* end = nullptr;
    double d = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(d))
        return std::nullopt;
    return d;
}

std::string text_of(const Value& v)
{
    if (auto d = std::get_if<double>(&v))
        return format_number(*d);
    return std::get<std::string>(v);
}

OracleResult aggregate(const std::string& call, const Environment& env)
{
    auto open = call.find('(');
    std::string fn = call.substr(0, open);
    std::string field = call.substr(open + 1, call.size() - open - 2);
    if (fn == "count")
        return Value{static_cast<double>(env.dataset.size())};
    if (env.dataset.empty())
        return Errc::TypeMismatch;
    std::vector<double> values;
    for (const auto& row : env.dataset) {
        if (!row.contains(field))
            return Errc::UnboundName;
        const Json& v = row[field];
        std::optional<double> d;
        if (v.is_number())
            d = v.get<double>();
        else if (v.is_string())
            d = coerce(Value{v.get<std::string>()});
        if (!d)
            return Errc::TypeMismatch;
        values.push_back(*d);
    }
    if (fn == "sum") {
        double s = 0;
        for (double v : values)
            s += v;
        return Value{s};
    }
    if (fn == "min")
        return Value{*std::min_element(values.begin(), values.end())};
    return Value{*std::max_element(values.begin(), values.end())};
}

} // namespace

ExprPtr random_expression(Rng& rng, int depth)
{
    if (depth <= 0 || coin(rng, 0.25))
        return leaf(rng);
    auto n = std::make_shared<ExprNode>();
    double r = uniform(rng, 0, 1);
    if (r < 0.12) {
        n->kind = ExprNode::Kind::Negate;
        n->lhs = random_expression(rng, depth - 1);
    } else if (r < 0.2) {
        n->kind = ExprNode::Kind::Group;
        n->lhs = random_expression(rng, depth - 1);
    } else {
        n->kind = ExprNode::Kind::Binary;
        n->op = "+-*/"[uniform_int(rng, 0, 3)];
        n->lhs = random_expression(rng, depth - 1);
        n->rhs = random_expression(rng, depth - 1);
    }
    return n;
}

std::string render_expression(const ExprNode& node, Rng& rng)
{
    return spaces(rng) + render(node, rng) + spaces(rng);
}

OracleResult oracle_evaluate(const ExprNode& n, const Environment& env)
{
    switch (n.kind) {
    case ExprNode::Kind::Number:
        return Value{n.number};
    case ExprNode::Kind::String:
        return Value{n.text};
    case ExprNode::Kind::Name:
        return lookup(n.text, env);
    case ExprNode::Kind::Aggregate:
        return aggregate(n.text, env);
    case ExprNode::Kind::Group:
        return oracle_evaluate(*n.lhs, env);
    case ExprNode::Kind::Negate: {
        OracleResult inner = oracle_evaluate(*n.lhs, env);
        if (auto err = std::get_if<Errc>(&inner))
            return *err;
        auto d = coerce(std::get<Value>(inner));
        if (!d)
            return Errc::TypeMismatch;
        return Value{-*d};
    }
    case ExprNode::Kind::Binary: {
        OracleResult l = oracle_evaluate(*n.lhs, env);
        if (auto err = std::get_if<Errc>(&l))
            return *err;
        OracleResult r = oracle_evaluate(*n.rhs, env);
        if (auto err = std::get_if<Errc>(&r))
            return *err;
        const Value& a = std::get<Value>(l);
        const Value& b = std::get<Value>(r);
        if (n.op == '+' && (std::holds_alternative<std::string>(a) || std::holds_alternative<std::string>(b)))
            return Value{text_of(a) + text_of(b)};
        auto x = coerce(a);
        auto y = coerce(b);
        if (!x || !y)
            return Errc::TypeMismatch;
        switch (n.op) {
        case '+': return Value{*x + *y};
        case '-': return Value{*x - *y};
        case '*': return Value{*x * *y};
        default:
            if (*y == 0)
                return Errc::DivisionByZero;
            return Value{*x / *y};
        }
    }
    }
    return Errc::ExpressionSyntax;
}

Environment oracle_environment()
{
    Environment env;
    env.values["w"] = 600.0;
    env.values["h"] = 400.0;
    env.values["zero"] = 0.0;
    env.values["label"] = std::string("bar");
    env.values["n"] = std::string("12");
    env.objects["datum"] = Json{{"value", 7}, {"name", "C"}, {"nested", {{"x", 2.5}}}};
    env.objects["mark"] = Json{{"height", 84}};
    env.unresolved["ghost"] = "selector '.ghost' matched nothing";
    env.dataset = {Json{{"value", 12}, {"name", "A"}}, Json{{"value", "35"}, {"name", "B"}}, Json{{"value", 8.5}, {"name", "C"}}};
    return env;
}

// ─── Synthetic encodings ────────────────────────────────────────────────────

namespace {

const std::vector<std::string> kPalette{
    "steelblue", "orange", "#2ca02c", "#d62728", "rgb(148, 103, 189)", "#8c564b", "hotpink", "#7f7f7f", "olive", "teal"};

std::string num(double v)
{
    return format_number(v);
}

SceneElement mark_element(const std::string& channel)
{
    SceneElement el;
    const bool circle = channel == "cx" || channel == "cy" || channel == "r";
    el.tag = circle ? "circle" : "rect";
    el.attrs["class"] = "mark";
    if (circle) {
        el.attrs["cx"] = "50";
        el.attrs["cy"] = "50";
        el.attrs["r"] = "4";
    } else {
        el.attrs["x"] = "10";
        el.attrs["y"] = "10";
        el.attrs["width"] = "8";
        el.attrs["height"] = "8";
    }
    el.attrs["fill"] = "black";
    return el;
}

} // namespace

std::pair<SyntheticScale, RenderedScene> synthetic_scale_scene(Rng& rng, ScaleKind kind, double noise_px)
{
    SyntheticScale truth;
    truth.kind = kind;
    auto jitter = [&](const std::string& channel, double v) {
        return is_positional_channel(channel) && noise_px > 0 ? v + uniform(rng, -noise_px, noise_px) : v;
    };

    SceneElement plot;
    plot.tag = "g";
    plot.attrs["class"] = "plot";
    plot.attrs["transform"] = "translate(" + num(uniform_int(rng, 0, 80)) + "," + num(uniform_int(rng, 0, 80)) + ")";

    auto add = [&](SceneElement el, Json row) {
        row["id"] = "m" + std::to_string(truth.dataset.size());
        el.datum = row;
        truth.dataset.push_back(row);
        plot.children.push_back(std::move(el));
    };

    const double r0 = uniform(rng, 20, 200);
    const double range = uniform(rng, 400, 1000);

    if (kind == ScaleKind::Linear || kind == ScaleKind::Log) {
        truth.field = "v";
        truth.channel = pick(rng, std::vector<std::string>{"x", "y", "cx", "cy", "r", "width", "height"});
        const int n = uniform_int(rng, 5, 40);
        std::vector<double> values;
        double lo = 0;
        double hi = 0;
        if (kind == ScaleKind::Linear) {
            lo = uniform(rng, -50, 50);
            hi = lo + uniform(rng, 10, 1000);
            for (int i = 0; i < n; ++i)
                values.push_back(uniform(rng, lo, hi));
        } else {
            lo = uniform(rng, -1, 2);
            hi = lo + uniform(rng, 1, 3);
            for (int i = 0; i < n; ++i)
                values.push_back(std::pow(10.0, uniform(rng, lo, hi)));
        }
        // Pin the extremes so the encoded domain is exactly [lo, hi].
        values[0] = kind == ScaleKind::Linear ? lo : std::pow(10.0, lo);
        values[1] = kind == ScaleKind::Linear ? hi : std::pow(10.0, hi);
        const bool flip = is_positional_channel(truth.channel) && coin(rng, 0.5);
        truth.slope = (flip ? -range : range) / (hi - lo);
        truth.intercept = (flip ? r0 + range : r0) - truth.slope * lo;
        for (double v : values) {
            double t = kind == ScaleKind::Linear ? v : std::log10(v);
            SceneElement el = mark_element(truth.channel);
            el.attrs[truth.channel] = num(jitter(truth.channel, truth.slope * t + truth.intercept));
            add(std::move(el), Json{{"v", v}});
        }
    } else if (kind == ScaleKind::Ordinal) {
        truth.field = "cat";
        const bool positional = coin(rng, 0.3);
        if (positional) {
            // One mark per category at arbitrary, unevenly sized positions.
            truth.channel = pick(rng, std::vector<std::string>{"x", "cx"});
            const int k = uniform_int(rng, 3, 12);
            for (int i = 0; i < k; ++i) {
                SceneElement el = mark_element(truth.channel);
                el.attrs[truth.channel] = num(jitter(truth.channel, r0 + uniform(rng, 0, range)));
                if (truth.channel == "x")
                    el.attrs["width"] = num(uniform(rng, 2, 40));
                add(std::move(el), Json{{"cat", "k" + std::to_string(i)}});
            }
        } else {
            truth.channel = "fill";
            const int k = uniform_int(rng, 2, static_cast<int>(kPalette.size()));
            std::vector<std::string> colors = kPalette;
            std::shuffle(colors.begin(), colors.end(), rng);
            const int n = uniform_int(rng, k, 40);
            for (int i = 0; i < n; ++i) {
                int c = i < k ? i : uniform_int(rng, 0, k - 1);
                SceneElement el = mark_element("x");
                el.attrs["x"] = num(uniform(rng, 0, 500));
                el.attrs["fill"] = colors[static_cast<std::size_t>(c)];
                add(std::move(el), Json{{"cat", "c" + std::to_string(c)}});
            }
        }
    } else {
        truth.field = "cat";
        truth.channel = pick(rng, std::vector<std::string>{"x", "y"});
        const int k = uniform_int(rng, 3, 15);
        truth.step = range / k;
        truth.bandwidth = truth.step * (1 - uniform(rng, 0, 0.4));
        truth.origin = uniform(rng, 0, 100);
        std::vector<int> order(static_cast<std::size_t>(k));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        const std::string extent = truth.channel == "x" ? "width" : "height";
        for (int slot = 0; slot < k; ++slot) {
            const int copies = uniform_int(rng, 1, 2);
            for (int c = 0; c < copies; ++c) {
                SceneElement el = mark_element(truth.channel);
                el.attrs[truth.channel] = num(jitter(truth.channel, truth.origin + slot * truth.step));
                el.attrs[extent] = num(truth.bandwidth);
                add(std::move(el), Json{{"cat", "b" + std::to_string(order[static_cast<std::size_t>(slot)])}});
            }
        }
    }

    // Shuffle document order so binding cannot rely on it.
    std::shuffle(plot.children.begin(), plot.children.end(), rng);
    SceneElement svg;
    svg.tag = "svg";
    svg.attrs["width"] = "1400";
    svg.attrs["height"] = "1400";
    svg.children.push_back(std::move(plot));
    return {std::move(truth), RenderedScene(1, "about:blank", {1400, 1400}, std::move(svg))};
}

// ─── JSON schema subset ─────────────────────────────────────────────────────

namespace {

bool type_is(const Json& doc, const std::string& type)
{
    if (type == "object") return doc.is_object();
    if (type == "array") return doc.is_array();
    if (type == "string") return doc.is_string();
    if (type == "number") return doc.is_number();
    if (type == "integer") return doc.is_number_integer() || (doc.is_number_float() && std::floor(doc.get<double>()) == doc.get<double>());
    if (type == "boolean") return doc.is_boolean();
    if (type == "null") return doc.is_null();
    return false;
}

} // namespace

std::vector<std::string> schema_errors(const Json& schema, const Json& doc, const std::string& path)
{
    std::vector<std::string> errors;
    auto add = [&](const std::string& msg) { errors.push_back(path + ": " + msg); };
    if (schema.contains("type")) {
        const Json& t = schema["type"];
        bool ok = false;
        if (t.is_string())
            ok = type_is(doc, t.get<std::string>());
        else
            for (const auto& alt : t)
                ok = ok || type_is(doc, alt.get<std::string>());
        if (!ok) {
            add("expected type " + t.dump());
            return errors;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& v : schema["enum"])
            found = found || v == doc;
        if (!found)
            add("value not in enum");
    }
    if (schema.contains("const") && schema["const"] != doc)
        add("value differs from const");
    if (schema.contains("minimum") && doc.is_number() && doc.get<double>() < schema["minimum"].get<double>())
        add("below minimum");
    if (schema.contains("minLength") && doc.is_string() && doc.get<std::string>().size() < schema["minLength"].get<std::size_t>())
        add("shorter than minLength");
    if (doc.is_object()) {
        for (const auto& req : schema.value("required", Json::array()))
            if (!doc.contains(req.get<std::string>()))
                add("missing required property '" + req.get<std::string>() + "'");
        const Json props = schema.value("properties", Json::object());
        for (const auto& [key, value] : doc.items()) {
            if (props.contains(key)) {
                auto sub = schema_errors(props[key], value, path + "." + key);
                errors.insert(errors.end(), sub.begin(), sub.end());
            } else if (schema.contains("additionalProperties")) {
                const Json& extra = schema["additionalProperties"];
                if (extra.is_boolean() && !extra.get<bool>())
                    add("unexpected property '" + key + "'");
                else if (extra.is_object()) {
                    auto sub = schema_errors(extra, value, path + "." + key);
                    errors.insert(errors.end(), sub.begin(), sub.end());
                }
            }
        }
    }
    if (doc.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < doc.size(); ++i) {
            auto sub = schema_errors(schema["items"], doc[i], path + "[" + std::to_string(i) + "]");
            errors.insert(errors.end(), sub.begin(), sub.end());
        }
    }
    return errors;
}

Json load_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    return Json::parse(in);
}

// ─── Action sequences ───────────────────────────────────────────────────────

namespace {

const char* const kKeys[] = {"a", "Z", "7", " ", "\xc3\xa9", "\xe2\x82\xac", "\xee\x80\x87", "\xf0\x9f\x98\x80"};

int pick(Rng& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::vector<InputAction> pointer_actions(Rng& rng)
{
    std::vector<InputAction> out;
    std::vector<int> held;
    const int n = pick(rng, 0, 12);
    for (int i = 0; i < n; ++i) {
        switch (pick(rng, 0, 3)) {
        case 0:
            out.push_back(PointerMove{pick(rng, -50, 2000), pick(rng, -50, 2000), pick(rng, 0, 1) ? "viewport" : "pointer",
                pick(rng, 0, 500)});
            break;
        case 1: {
            int button = pick(rng, 0, 2);
            held.push_back(button);
            out.push_back(PointerDown{button});
            break;
        }
        case 2:
            if (!held.empty()) {
                out.push_back(PointerUp{held.back()});
                held.pop_back();
            }
            break;
        default:
            out.push_back(Pause{pick(rng, 0, 300)});
        }
    }
    while (!held.empty()) {
        out.push_back(PointerUp{held.back()});
        held.pop_back();
    }
    return out;
}

std::vector<InputAction> key_actions(Rng& rng)
{
    std::vector<InputAction> out;
    const int n = pick(rng, 0, 10);
    for (int i = 0; i < n; ++i) {
        std::string key = kKeys[pick(rng, 0, 7)];
        switch (pick(rng, 0, 2)) {
        case 0: out.push_back(KeyDown{key}); break;
        case 1: out.push_back(KeyUp{key}); break;
        default: out.push_back(Pause{pick(rng, 0, 300)});
        }
    }
    return out;
}

} // namespace

ActionSequence random_action_sequence(Rng& rng)
{
    ActionSequence seq;
    const int n = pick(rng, 0, 4);
    for (int i = 0; i < n; ++i) {
        InputSource source;
        source.id = "src" + std::to_string(i);
        switch (pick(rng, 0, 2)) {
        case 0:
            source.kind = SourceKind::Pointer;
            source.actions = pointer_actions(rng);
            break;
        case 1:
            source.kind = SourceKind::Key;
            source.actions = key_actions(rng);
            break;
        default:
            source.kind = SourceKind::None;
            for (int k = pick(rng, 0, 4); k > 0; --k)
                source.actions.push_back(Pause{pick(rng, 0, 300)});
        }
        seq.sources.push_back(std::move(source));
    }
    return seq;
}

ActionSequence corrupt_action_sequence(Rng& rng, ActionSequence seq)
{
    if (seq.sources.empty()) {
        seq.sources.push_back({"p", SourceKind::Pointer, {PointerDown{0}}});
        return seq;
    }
    auto& source = seq.sources[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(seq.sources.size()) - 1))];
    switch (pick(rng, 0, 3)) {
    case 0:
        seq.sources.push_back({source.id, SourceKind::None, {}});
        break;
    case 1:
        source.actions.push_back(Pause{-pick(rng, 1, 100)});
        break;
    case 2:
        // An action from another kind.
        if (source.kind == SourceKind::Key)
            source.actions.push_back(PointerMove{1, 1, "viewport", 0});
        else
            source.actions.push_back(KeyDown{"a"});
        break;
    default:
        if (source.kind == SourceKind::Pointer) {
            source.actions.push_back(PointerDown{pick(rng, 0, 2)});
        } else {
            seq.sources.push_back({"dangling", SourceKind::Pointer, {PointerDown{1}, PointerUp{0}}});
            if (std::count_if(seq.sources.begin(), seq.sources.end(), [](const InputSource& s) { return s.id == "dangling"; }) > 1)
                seq.sources.back().id = "dangling2";
        }
    }
    return seq;
}

bool naive_sequence_valid(const ActionSequence& seq)
{
    for (std::size_t i = 0; i < seq.sources.size(); ++i) {
        const auto& s = seq.sources[i];
        if (s.id.empty())
            return false;
        for (std::size_t j = 0; j < i; ++j)
            if (seq.sources[j].id == s.id)
                return false;
        for (std::size_t a = 0; a < s.actions.size(); ++a) {
            const auto& act = s.actions[a];
            const bool pause = std::holds_alternative<Pause>(act);
            const bool pointer = std::holds_alternative<PointerMove>(act) || std::holds_alternative<PointerDown>(act)
                || std::holds_alternative<PointerUp>(act);
            const bool key = std::holds_alternative<KeyDown>(act) || std::holds_alternative<KeyUp>(act);
            if (s.kind == SourceKind::None && !pause)
                return false;
            if (s.kind == SourceKind::Pointer && key)
                return false;
            if (s.kind == SourceKind::Key && pointer)
                return false;
            if (pause && std::get<Pause>(act).duration < 0)
                return false;
            if (auto m = std::get_if<PointerMove>(&act); m && m->duration < 0)
                return false;
            std::string value;
            if (auto k = std::get_if<KeyDown>(&act))
                value = k->value;
            if (auto k = std::get_if<KeyUp>(&act))
                value = k->value;
            if (key) {
                // One lead byte, the rest continuation bytes.
                auto leads = std::count_if(value.begin(), value.end(), [](char c) { return (c & 0xC0) != 0x80; });
                if (leads != 1 || (value[0] & 0xC0) == 0x80)
                    return false;
            }
        }
        // Every down needs a later up for the same button; an up closes at most one down.
        for (int button = 0; button < 5; ++button) {
            int open = 0;
            for (const auto& act : s.actions) {
                if (auto d = std::get_if<PointerDown>(&act); d && d->button == button)
                    ++open;
                if (auto u = std::get_if<PointerUp>(&act); u && u->button == button && open > 0)
                    --open;
            }
            if (open > 0)
                return false;
        }
    }
    return true;
}

// ─── Reports ────────────────────────────────────────────────────────────────

GradeReport random_report(Rng& rng)
{
    static const char* const kText[] = {"", "ok", "say \"hi\"", "line\nbreak", "tab\there", "caf\xc3\xa9", "\xe2\x9c\x93 done",
        "back\\slash", "{observed}", "<b>html</b>"};
    auto text = [&] {
        std::string out;
        for (int i = pick(rng, 0, 3); i > 0; --i)
            out += kText[pick(rng, 0, 9)];
        return out;
    };
    GradeReport report;
    report.submission_id = "student-" + std::to_string(pick(rng, 0, 9999)) + text();
    report.timestamp = "2024-01-01T00:00:00Z";
    const int n = pick(rng, 0, 15);
    for (int i = 0; i < n; ++i) {
        CheckResult r;
        r.id = "check_" + std::to_string(i) + text();
        r.max_points = pick(rng, 0, 1) ? pick(rng, 0, 10) : pick(rng, 0, 1000) / 8.0;
        r.passed = pick(rng, 0, 1) == 1;
        r.points_awarded = r.passed ? r.max_points : 0;
        r.observed = text();
        r.expected = text();
        r.feedback = text();
        report.results.push_back(std::move(r));
        report.max += report.results.back().max_points;
        report.total += report.results.back().points_awarded;
    }
    for (int i = pick(rng, 0, 2); i > 0; --i)
        report.notes.push_back(text());
    if (pick(rng, 0, 1))
        report.artifacts.push_back({"screenshot", "/tmp/out/screenshot.png"});
    report.environment.viewport_width = pick(rng, 1, 4000);
    report.environment.viewport_height = pick(rng, 1, 4000);
    report.environment.driver = pick(rng, 0, 1) ? "snapshot" : "http://127.0.0.1:4444";
    return report;
}

} // namespace vizgrade::testing
