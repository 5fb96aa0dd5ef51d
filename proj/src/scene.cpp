#include "vizgrade/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace vizgrade {

// ─── Transform2D ────────────────────────────────────────────────────────────

Transform2D Transform2D::rotate(double degrees)
{
    const double rad = degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(rad);
    const double sn = std::sin(rad);
    return {cs, sn, -sn, cs, 0, 0};
}

bool Transform2D::is_finite() const
{
    return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d) && std::isfinite(e)
        && std::isfinite(f);
}

Transform2D operator*(const Transform2D& l, const Transform2D& r)
{
    return {
        l.a * r.a + l.c * r.b,
        l.b * r.a + l.d * r.b,
        l.a * r.c + l.c * r.d,
        l.b * r.c + l.d * r.d,
        l.a * r.e + l.c * r.f + l.e,
        l.b * r.e + l.d * r.f + l.f,
    };
}

namespace {

[[noreturn]] void transform_error(std::string_view text, const std::string& why)
{
    throw Error(Errc::TransformParseError, "'" + std::string(text) + "': " + why);
}

bool is_separator(char ch)
{
    return ch == ',' || std::isspace(static_cast<unsigned char>(ch));
}

std::vector<double> parse_arguments(std::string_view args, std::string_view text)
{
    std::vector<double> out;
    std::size_t i = 0;
    while (i < args.size()) {
        while (i < args.size() && is_separator(args[i]))
            ++i;
        if (i == args.size())
            break;
        std::size_t start = i;
        while (i < args.size() && !is_separator(args[i]))
            ++i;
        std::string token(args.substr(start, i - start));
        char* end = nullptr;
        double value = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size() || !std::isfinite(value))
            transform_error(text, "bad number '" + token + "'");
        out.push_back(value);
    }
    return out;
}

} // namespace

Transform2D parse_transform(std::string_view text)
{
    Transform2D result;
    std::size_t i = 0;
    while (true) {
        while (i < text.size() && is_separator(text[i]))
            ++i;
        if (i == text.size())
            break;
        std::size_t name_start = i;
        while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i])))
            ++i;
        std::string name(text.substr(name_start, i - name_start));
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        if (name.empty() || i == text.size() || text[i] != '(')
            transform_error(text, "expected function");
        auto close = text.find(')', i);
        if (close == std::string_view::npos)
            transform_error(text, "unterminated '('");
        auto args = parse_arguments(text.substr(i + 1, close - i - 1), text);
        i = close + 1;

        auto need = [&](std::size_t lo, std::size_t hi) {
            if (args.size() < lo || args.size() > hi)
                transform_error(text, name + " takes " + std::to_string(lo) + ".." + std::to_string(hi) + " arguments");
        };
        Transform2D step;
        if (name == "translate") {
            need(1, 2);
            step = Transform2D::translate(args[0], args.size() > 1 ? args[1] : 0.0);
        } else if (name == "scale") {
            need(1, 2);
            step = Transform2D::scale(args[0], args.size() > 1 ? args[1] : args[0]);
        } else if (name == "rotate") {
            if (args.size() == 2)
                transform_error(text, "rotate takes 1 or 3 arguments");
            need(1, 3);
            step = Transform2D::rotate(args[0]);
            if (args.size() == 3)
                step = Transform2D::translate(args[1], args[2]) * step * Transform2D::translate(-args[1], -args[2]);
        } else if (name == "matrix") {
            need(6, 6);
            step = {args[0], args[1], args[2], args[3], args[4], args[5]};
        } else if (name == "skewX") {
            need(1, 1);
            step = {1, 0, std::tan(args[0] * std::numbers::pi / 180.0), 1, 0, 0};
        } else if (name == "skewY") {
            need(1, 1);
            step = {1, std::tan(args[0] * std::numbers::pi / 180.0), 0, 1, 0, 0};
        } else {
            transform_error(text, "unknown function '" + name + "'");
        }
        result = result * step;
    }
    if (!result.is_finite())
        transform_error(text, "non-finite matrix");
    return result;
}

// ─── RenderedScene ──────────────────────────────────────────────────────────

RenderedScene::RenderedScene(int version, std::string url, Viewport viewport, SceneElement root)
    : version_(version)
    , url_(std::move(url))
    , viewport_(viewport)
    , root_(std::move(root))
{
    index();
}

RenderedScene::RenderedScene(const RenderedScene& other)
    : version_(other.version_)
    , url_(other.url_)
    , viewport_(other.viewport_)
    , root_(other.root_)
{
    index();
}

RenderedScene& RenderedScene::operator=(const RenderedScene& other)
{
    if (this != &other) {
        version_ = other.version_;
        url_ = other.url_;
        viewport_ = other.viewport_;
        root_ = other.root_;
        index();
    }
    return *this;
}

RenderedScene::RenderedScene(RenderedScene&& other) noexcept
    : version_(other.version_)
    , url_(std::move(other.url_))
    , viewport_(other.viewport_)
    , root_(std::move(other.root_))
{
    index();
}

RenderedScene& RenderedScene::operator=(RenderedScene&& other) noexcept
{
    version_ = other.version_;
    url_ = std::move(other.url_);
    viewport_ = other.viewport_;
    root_ = std::move(other.root_);
    index();
    return *this;
}

void RenderedScene::index()
{
    flat_.clear();
    parents_.clear();
    struct Frame {
        const SceneElement* node;
        std::ptrdiff_t parent;
    };
    std::vector<Frame> stack{{&root_, -1}};
    while (!stack.empty()) {
        Frame frame = stack.back();
        stack.pop_back();
        const auto self = static_cast<std::ptrdiff_t>(flat_.size());
        flat_.push_back(frame.node);
        parents_.push_back(frame.parent);
        for (auto it = frame.node->children.rbegin(); it != frame.node->children.rend(); ++it)
            stack.push_back({&*it, self});
    }
}

std::optional<ElementRef> RenderedScene::parent(ElementRef ref) const
{
    auto p = parents_.at(ref.index);
    if (p < 0)
        return std::nullopt;
    return ElementRef{static_cast<std::size_t>(p)};
}

std::vector<ElementRef> RenderedScene::ancestors(ElementRef ref) const
{
    std::vector<ElementRef> out;
    for (auto p = parent(ref); p; p = parent(*p))
        out.push_back(*p);
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<ElementRef> RenderedScene::children(ElementRef ref) const
{
    std::vector<ElementRef> out;
    for (std::size_t i = ref.index + 1; i < flat_.size(); ++i) {
        if (parents_[i] == static_cast<std::ptrdiff_t>(ref.index))
            out.push_back({i});
        else if (parents_[i] < static_cast<std::ptrdiff_t>(ref.index))
            break;
    }
    return out;
}

std::string RenderedScene::text_content(ElementRef ref) const
{
    std::string out = element(ref).text;
    for (auto child : children(ref))
        out += text_content(child);
    return out;
}

// ─── Snapshot (de)serialization ─────────────────────────────────────────────

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& why)
{
    throw Error(Errc::SchemaError, where + ": " + why);
}

std::map<std::string, std::string> string_map(const Json& value, const std::string& where)
{
    if (!value.is_object())
        schema_error(where, "expected object");
    std::map<std::string, std::string> out;
    for (const auto& [key, v] : value.items()) {
        if (v.is_string())
            out[key] = v.get<std::string>();
        else if (v.is_number() || v.is_boolean())
            out[key] = v.dump();
        else
            schema_error(where + "." + key, "expected string value");
    }
    return out;
}

double number_field(const Json& obj, const char* key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end())
        schema_error(where, std::string("missing required field '") + key + "'");
    if (!it->is_number())
        schema_error(where + "." + key, "expected number");
    return it->get<double>();
}

SceneElement element_from_json(const Json& node, const std::string& where, std::vector<std::string>* warnings)
{
    static const std::set<std::string> known{"tag", "attrs", "computed_style", "datum", "bbox", "text", "children"};
    if (!node.is_object())
        schema_error(where, "expected element object");

    SceneElement el;
    auto tag = node.find("tag");
    if (tag == node.end())
        schema_error(where, "missing required field 'tag'");
    if (!tag->is_string() || tag->get<std::string>().empty())
        schema_error(where + ".tag", "expected non-empty string");
    for (char ch : tag->get<std::string>())
        el.tag.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));

    for (const auto& [key, value] : node.items()) {
        if (!known.count(key)) {
            if (warnings)
                warnings->push_back("ignoring unknown field '" + key + "' at " + where);
            continue;
        }
        if (key == "attrs") {
            el.attrs = string_map(value, where + ".attrs");
        } else if (key == "computed_style") {
            el.computed_style = string_map(value, where + ".computed_style");
        } else if (key == "datum") {
            el.datum = value;
        } else if (key == "bbox") {
            if (value.is_null())
                continue;
            if (!value.is_object())
                schema_error(where + ".bbox", "expected object");
            Box box{number_field(value, "x", where + ".bbox"), number_field(value, "y", where + ".bbox"),
                number_field(value, "w", where + ".bbox"), number_field(value, "h", where + ".bbox")};
            if (box.w < 0 || box.h < 0)
                schema_error(where + ".bbox", "negative extent");
            el.bbox = box;
        } else if (key == "text") {
            if (!value.is_string())
                schema_error(where + ".text", "expected string");
            el.text = value.get<std::string>();
        } else if (key == "children") {
            if (!value.is_array())
                schema_error(where + ".children", "expected array");
            el.children.reserve(value.size());
            for (std::size_t i = 0; i < value.size(); ++i)
                el.children.push_back(
                    element_from_json(value[i], where + ".children[" + std::to_string(i) + "]", warnings));
        }
    }
    return el;
}

Json element_to_json(const SceneElement& el)
{
    Json node = Json::object();
    node["tag"] = el.tag;
    node["attrs"] = el.attrs;
    if (!el.computed_style.empty())
        node["computed_style"] = el.computed_style;
    if (el.datum)
        node["datum"] = *el.datum;
    if (el.bbox)
        node["bbox"] = {{"x", el.bbox->x}, {"y", el.bbox->y}, {"w", el.bbox->w}, {"h", el.bbox->h}};
    if (!el.text.empty())
        node["text"] = el.text;
    node["children"] = Json::array();
    for (const auto& child : el.children)
        node["children"].push_back(element_to_json(child));
    return node;
}

bool is_container_tag(const std::string& tag)
{
    static const std::set<std::string> containers{"#document", "html", "body", "svg", "div", "main", "section"};
    return containers.count(tag) > 0;
}

} // namespace

RenderedScene scene_from_json(const Json& doc, std::vector<std::string>* warnings)
{
    static const std::set<std::string> known{"version", "url", "viewport", "root"};
    if (!doc.is_object())
        schema_error("$", "expected object");
    for (const auto& [key, value] : doc.items())
        if (!known.count(key) && warnings)
            warnings->push_back("ignoring unknown field '" + key + "' at $");

    auto version = doc.find("version");
    if (version == doc.end())
        schema_error("$", "missing required field 'version'");
    if (!version->is_number_integer() || version->get<int>() != RenderedScene::kVersion)
        schema_error("$.version", "unsupported version " + version->dump());

    auto url = doc.find("url");
    if (url == doc.end())
        schema_error("$", "missing required field 'url'");
    if (!url->is_string())
        schema_error("$.url", "expected string");

    auto vp = doc.find("viewport");
    if (vp == doc.end())
        schema_error("$", "missing required field 'viewport'");
    if (!vp->is_object())
        schema_error("$.viewport", "expected object");
    Viewport viewport{static_cast<int>(number_field(*vp, "width", "$.viewport")),
        static_cast<int>(number_field(*vp, "height", "$.viewport"))};
    if (viewport.width < 0 || viewport.height < 0)
        schema_error("$.viewport", "negative size");

    auto root = doc.find("root");
    if (root == doc.end())
        schema_error("$", "missing required field 'root'");
    SceneElement root_el = element_from_json(*root, "$.root", warnings);
    if (!is_container_tag(root_el.tag))
        schema_error("$.root.tag", "'" + root_el.tag + "' is not a document or svg container");

    return RenderedScene(version->get<int>(), url->get<std::string>(), viewport, std::move(root_el));
}

RenderedScene parse_snapshot(std::string_view bytes, std::vector<std::string>* warnings)
{
    Json doc = Json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (doc.is_discarded())
        schema_error("$", "not valid JSON");
    return scene_from_json(doc, warnings);
}

Json scene_to_json(const RenderedScene& scene)
{
    return Json{
        {"version", scene.version()},
        {"url", scene.url()},
        {"viewport", {{"width", scene.viewport().width}, {"height", scene.viewport().height}}},
        {"root", element_to_json(scene.root())},
    };
}

std::string serialize_snapshot(const RenderedScene& scene)
{
    return scene_to_json(scene).dump(2);
}

RenderedScene load_snapshot_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        schema_error(path, "cannot open snapshot file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_snapshot(buf.str());
}

// ─── Geometry and style ─────────────────────────────────────────────────────

Transform2D effective_transform(const RenderedScene& scene, ElementRef ref)
{
    Transform2D result;
    auto chain = scene.ancestors(ref);
    chain.push_back(ref);
    for (auto node : chain) {
        const auto& attrs = scene.element(node).attrs;
        auto it = attrs.find("transform");
        if (it != attrs.end())
            result = result * parse_transform(it->second);
    }
    return result;
}

namespace {

std::optional<double> length_attr(const SceneElement& el, const char* name)
{
    auto it = el.attrs.find(name);
    if (it == el.attrs.end())
        return std::nullopt;
    std::string text = it->second;
    if (text.size() > 2 && text.compare(text.size() - 2, 2, "px") == 0)
        text.resize(text.size() - 2);
    char* end = nullptr;
    double value = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

[[noreturn]] void no_geometry(const SceneElement& el, const std::string& why)
{
    throw Error(Errc::NoGeometry, "<" + el.tag + "> " + why);
}

Box local_box(const SceneElement& el)
{
    auto need = [&](const char* name) {
        auto v = length_attr(el, name);
        if (!v)
            no_geometry(el, std::string("has no usable '") + name + "' attribute");
        return *v;
    };
    auto optional = [&](const char* name) { return length_attr(el, name).value_or(0.0); };

    if (el.tag == "rect" || el.tag == "image" || el.tag == "use" || el.tag == "foreignobject" || el.tag == "svg")
        return {optional("x"), optional("y"), need("width"), need("height")};
    if (el.tag == "circle") {
        double r = need("r");
        return {optional("cx") - r, optional("cy") - r, 2 * r, 2 * r};
    }
    if (el.tag == "ellipse") {
        double rx = need("rx");
        double ry = need("ry");
        return {optional("cx") - rx, optional("cy") - ry, 2 * rx, 2 * ry};
    }
    if (el.tag == "line") {
        double x1 = optional("x1"), y1 = optional("y1"), x2 = optional("x2"), y2 = optional("y2");
        return {std::min(x1, x2), std::min(y1, y2), std::abs(x2 - x1), std::abs(y2 - y1)};
    }
    no_geometry(el, "has no probe bbox and no local geometry attributes");
}

} // namespace

Box absolute_geometry(const RenderedScene& scene, ElementRef ref)
{
    const auto& el = scene.element(ref);
    if (el.bbox)
        return *el.bbox;

    Box local = local_box(el);
    if (local.w < 0 || local.h < 0)
        no_geometry(el, "has negative extent");
    Transform2D m = effective_transform(scene, ref);
    const Point corners[] = {
        m.apply({local.x, local.y}),
        m.apply({local.x + local.w, local.y}),
        m.apply({local.x, local.y + local.h}),
        m.apply({local.x + local.w, local.y + local.h}),
    };
    double min_x = corners[0].x, max_x = corners[0].x, min_y = corners[0].y, max_y = corners[0].y;
    for (const auto& p : corners) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    return {min_x, min_y, max_x - min_x, max_y - min_y};
}

std::optional<std::string> style_value(const SceneElement& element, const std::string& name)
{
    if (auto it = element.computed_style.find(name); it != element.computed_style.end())
        return it->second;

    // inline style="a: b; c: d" beats the presentation attribute
    if (auto it = element.attrs.find("style"); it != element.attrs.end()) {
        std::istringstream decls(it->second);
        std::string decl;
        while (std::getline(decls, decl, ';')) {
            auto colon = decl.find(':');
            if (colon == std::string::npos)
                continue;
            auto trim = [](std::string s) {
                auto b = s.find_first_not_of(" \t\n");
                auto e = s.find_last_not_of(" \t\n");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            if (trim(decl.substr(0, colon)) == name)
                return trim(decl.substr(colon + 1));
        }
    }

    if (auto it = element.attrs.find(name); it != element.attrs.end())
        return it->second;
    return std::nullopt;
}

namespace {

bool self_displayed(const SceneElement& el)
{
    if (auto display = style_value(el, "display"); display && *display == "none")
        return false;
    if (auto opacity = style_value(el, "opacity")) {
        char* end = nullptr;
        double value = std::strtod(opacity->c_str(), &end);
        if (end != opacity->c_str() && value <= 0.0)
            return false;
    }
    return true;
}

} // namespace

bool is_visible(const RenderedScene& scene, ElementRef ref)
{
    auto chain = scene.ancestors(ref);
    chain.push_back(ref);
    for (auto node : chain)
        if (!self_displayed(scene.element(node)))
            return false;

    // visibility is inherited and may be overridden by a descendant
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        if (auto visibility = style_value(scene.element(*it), "visibility"))
            return *visibility != "hidden" && *visibility != "collapse";
    }
    return true;
}

} // namespace vizgrade
