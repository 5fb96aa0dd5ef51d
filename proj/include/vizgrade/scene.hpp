#pragma once

#include "json.hpp"
#include "vizgrade/error.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vizgrade {

using Json = nlohmann::json;

// ─── Color ──────────────────────────────────────────────────────────────────

struct Color {
    int r = 0;
    int g = 0;
    int b = 0;
    double alpha = 1.0;

    friend bool operator==(const Color&, const Color&) = default;
};

/// Accepts #rgb, #rgba, #rrggbb, #rrggbbaa, rgb(), rgba() (integer or percent
/// components) and the CSS named colors, case-insensitively.
Color parse_color(std::string_view text);
std::string to_string(const Color& c);

// ─── Geometry ───────────────────────────────────────────────────────────────

struct Point {
    double x = 0;
    double y = 0;
};

struct Box {
    double x = 0;
    double y = 0;
    double w = 0;
    double h = 0;

    Point center() const { return {x + w / 2, y + h / 2}; }
    friend bool operator==(const Box&, const Box&) = default;
};

/// Affine map (x, y) -> (a*x + c*y + e, b*x + d*y + f).
struct Transform2D {
    double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

    static Transform2D identity() { return {}; }
    static Transform2D translate(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }
    static Transform2D scale(double sx, double sy) { return {sx, 0, 0, sy, 0, 0}; }
    static Transform2D rotate(double degrees);

    Point apply(Point p) const { return {a * p.x + c * p.y + e, b * p.x + d * p.y + f}; }
    bool is_finite() const;

    /// (lhs * rhs).apply(p) == lhs.apply(rhs.apply(p))
    friend Transform2D operator*(const Transform2D& lhs, const Transform2D& rhs);
};

/// Parses an SVG transform list (translate, scale, rotate, matrix, skewX, skewY).
Transform2D parse_transform(std::string_view text);

// ─── Scene model ────────────────────────────────────────────────────────────

/// Index of an element within its scene, in document (pre-)order.
struct ElementRef {
    std::size_t index = 0;
    friend auto operator<=>(const ElementRef&, const ElementRef&) = default;
};

struct SceneElement {
    std::string tag;
    std::map<std::string, std::string> attrs;
    std::map<std::string, std::string> computed_style;
    std::optional<Json> datum;
    std::optional<Box> bbox;
    /// Direct text content of the node (text children only).
    std::string text;
    std::vector<SceneElement> children;

    friend bool operator==(const SceneElement&, const SceneElement&) = default;
};

struct Viewport {
    int width = 0;
    int height = 0;
    friend bool operator==(const Viewport&, const Viewport&) = default;
};

/// Immutable snapshot of a rendered document. The element tree is also
/// flattened into document order so elements can be addressed by ElementRef.
class RenderedScene {
public:
    static constexpr int kVersion = 1;

    RenderedScene(int version, std::string url, Viewport viewport, SceneElement root);

    int version() const { return version_; }
    const std::string& url() const { return url_; }
    Viewport viewport() const { return viewport_; }
    const SceneElement& root() const { return root_; }

    std::size_t size() const { return flat_.size(); }
    const SceneElement& element(ElementRef ref) const { return *flat_.at(ref.index); }
    std::optional<ElementRef> parent(ElementRef ref) const;
    /// Path of ancestors from the root down to (excluding) ref.
    std::vector<ElementRef> ancestors(ElementRef ref) const;
    std::vector<ElementRef> children(ElementRef ref) const;
    /// Concatenated text of the element and all its descendants.
    std::string text_content(ElementRef ref) const;

    friend bool operator==(const RenderedScene& lhs, const RenderedScene& rhs)
    {
        return lhs.version_ == rhs.version_ && lhs.url_ == rhs.url_ && lhs.viewport_ == rhs.viewport_
            && lhs.root_ == rhs.root_;
    }

    RenderedScene(const RenderedScene& other);
    RenderedScene& operator=(const RenderedScene& other);
    RenderedScene(RenderedScene&&) noexcept;
    RenderedScene& operator=(RenderedScene&&) noexcept;

private:
    void index();

    int version_;
    std::string url_;
    Viewport viewport_;
    SceneElement root_;
    std::vector<const SceneElement*> flat_;
    std::vector<std::ptrdiff_t> parents_;
};

/// Parses a .scene.json document. Unknown fields are skipped and reported
/// through `warnings` when provided.
RenderedScene parse_snapshot(std::string_view bytes, std::vector<std::string>* warnings = nullptr);
RenderedScene scene_from_json(const Json& doc, std::vector<std::string>* warnings = nullptr);
Json scene_to_json(const RenderedScene& scene);
std::string serialize_snapshot(const RenderedScene& scene);
RenderedScene load_snapshot_file(const std::string& path);

// ─── Selectors ──────────────────────────────────────────────────────────────

/// One compound selector: optional tag, any number of classes, optional id,
/// attribute presence tests.
struct CompoundSelector {
    std::optional<std::string> tag;
    std::optional<std::string> id;
    std::vector<std::string> classes;
    std::vector<std::string> attributes;
};

/// Compounds joined by descendant combinators, outermost first.
struct Selector {
    std::vector<CompoundSelector> parts;
};

Selector parse_selector(std::string_view text);
bool matches(const RenderedScene& scene, ElementRef ref, const CompoundSelector& compound);
bool matches(const RenderedScene& scene, ElementRef ref, const Selector& selector);
std::vector<ElementRef> query(const RenderedScene& scene, std::string_view selector);
std::vector<ElementRef> query(const RenderedScene& scene, const Selector& selector);

std::vector<std::string> class_list(const SceneElement& element);

// ─── Resolved geometry and style ────────────────────────────────────────────

Transform2D effective_transform(const RenderedScene& scene, ElementRef ref);
Box absolute_geometry(const RenderedScene& scene, ElementRef ref);

/// Style lookup: computed_style first, then the presentation attribute.
std::optional<std::string> style_value(const SceneElement& element, const std::string& name);
/// False when the element or an ancestor is display:none, visibility:hidden
/// or has zero opacity.
bool is_visible(const RenderedScene& scene, ElementRef ref);

} // namespace vizgrade
