#include "vizgrade/scene.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace vizgrade {

namespace {

[[noreturn]] void selector_error(std::string_view text, const std::string& why)
{
    throw Error(Errc::SelectorParseError, "'" + std::string(text) + "': " + why);
}

bool is_ident_char(char ch)
{
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_';
}

} // namespace

Selector parse_selector(std::string_view text)
{
    Selector selector;
    std::size_t i = 0;
    auto read_ident = [&]() {
        std::size_t start = i;
        while (i < text.size() && is_ident_char(text[i]))
            ++i;
        if (start == i)
            selector_error(text, "expected identifier at offset " + std::to_string(start));
        return std::string(text.substr(start, i - start));
    };

    while (true) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        if (i == text.size())
            break;

        CompoundSelector compound;
        bool any = false;
        if (text[i] == '*') {
            ++i;
            any = true;
        } else if (is_ident_char(text[i])) {
            std::string tag = read_ident();
            std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::tolower(c); });
            compound.tag = tag;
            any = true;
        }
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
            char ch = text[i];
            if (ch == '.') {
                ++i;
                compound.classes.push_back(read_ident());
            } else if (ch == '#') {
                ++i;
                std::string id = read_ident();
                if (compound.id && *compound.id != id)
                    selector_error(text, "conflicting ids");
                compound.id = id;
            } else if (ch == '[') {
                ++i;
                std::string name = read_ident();
                if (i == text.size() || text[i] != ']')
                    selector_error(text, "only attribute presence tests [name] are supported");
                ++i;
                compound.attributes.push_back(name);
            } else {
                selector_error(text, std::string("unsupported syntax '") + ch + "'");
            }
            any = true;
        }
        if (!any)
            selector_error(text, "empty compound selector");
        selector.parts.push_back(std::move(compound));
    }
    if (selector.parts.empty())
        selector_error(text, "empty selector");
    return selector;
}

std::vector<std::string> class_list(const SceneElement& element)
{
    std::vector<std::string> out;
    auto it = element.attrs.find("class");
    if (it == element.attrs.end())
        return out;
    std::istringstream words(it->second);
    std::string word;
    while (words >> word)
        out.push_back(word);
    return out;
}

bool matches(const RenderedScene& scene, ElementRef ref, const CompoundSelector& compound)
{
    const auto& el = scene.element(ref);
    if (compound.tag && *compound.tag != el.tag)
        return false;
    if (compound.id) {
        auto it = el.attrs.find("id");
        if (it == el.attrs.end() || it->second != *compound.id)
            return false;
    }
    if (!compound.classes.empty()) {
        auto classes = class_list(el);
        for (const auto& cls : compound.classes)
            if (std::find(classes.begin(), classes.end(), cls) == classes.end())
                return false;
    }
    for (const auto& attr : compound.attributes)
        if (!el.attrs.count(attr))
            return false;
    return true;
}

bool matches(const RenderedScene& scene, ElementRef ref, const Selector& selector)
{
    if (selector.parts.empty() || !matches(scene, ref, selector.parts.back()))
        return false;
    // Descendant-only combinators: greedy nearest-ancestor matching is exact.
    auto part = selector.parts.rbegin() + 1;
    for (auto node = scene.parent(ref); node && part != selector.parts.rend(); node = scene.parent(*node)) {
        if (matches(scene, *node, *part))
            ++part;
    }
    return part == selector.parts.rend();
}

std::vector<ElementRef> query(const RenderedScene& scene, const Selector& selector)
{
    std::vector<ElementRef> out;
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (matches(scene, ElementRef{i}, selector))
            out.push_back({i});
    return out;
}

std::vector<ElementRef> query(const RenderedScene& scene, std::string_view selector)
{
    return query(scene, parse_selector(selector));
}

} // namespace vizgrade
