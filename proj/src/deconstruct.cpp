#include "vizgrade/deconstruct.hpp"

#include "vizgrade/format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace vizgrade {

std::string to_string(const ChannelValue& value)
{
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>)
                return format_number(v);
            else if constexpr (std::is_same_v<T, Color>)
                return to_string(v);
            else
                return v;
        },
        value);
}

std::optional<double> Mark::number(const std::string& channel) const
{
    auto it = channels.find(channel);
    if (it == channels.end())
        return std::nullopt;
    if (auto v = std::get_if<double>(&it->second))
        return *v;
    return std::nullopt;
}

// ─── Extraction ─────────────────────────────────────────────────────────────

namespace {

constexpr const char* kNumericAttrs[] = {"x", "y", "width", "height", "cx", "cy", "r", "x1", "y1", "x2", "y2"};

std::optional<double> attr_number(const std::string& text)
{
    std::string_view view = text;
    if (view.size() > 2 && view.substr(view.size() - 2) == "px")
        view.remove_suffix(2);
    return parse_double(view);
}

Mark build_mark(const RenderedScene& scene, ElementRef ref)
{
    const auto& el = scene.element(ref);
    Mark mark;
    mark.element = ref;
    mark.datum = el.datum;
    try {
        mark.geometry = absolute_geometry(scene, ref);
    } catch (const Error&) {
        mark.geometry = std::nullopt;
    }

    for (const char* name : kNumericAttrs) {
        auto it = el.attrs.find(name);
        if (it == el.attrs.end())
            continue;
        if (auto v = attr_number(it->second))
            mark.channels[name] = *v;
        else
            mark.channels[name] = it->second;
    }
    for (const char* name : {"fill", "stroke"}) {
        auto value = style_value(el, name);
        if (!value)
            continue;
        try {
            mark.channels[name] = parse_color(*value);
        } catch (const Error&) {
            mark.channels[name] = *value; // "none", url(#gradient), ...
        }
    }
    if (auto opacity = style_value(el, "opacity")) {
        if (auto v = parse_double(*opacity))
            mark.channels["opacity"] = *v;
    }
    std::string text = scene.text_content(ref);
    if (!text.empty())
        mark.channels["text"] = text;
    return mark;
}

} // namespace

MarkGroup extract_group(const RenderedScene& scene, const std::string& anchor)
{
    auto refs = query(scene, anchor);
    if (refs.empty())
        throw Error(Errc::AnchorNotFound, "no element matches '" + anchor + "'");

    MarkGroup group;
    group.anchor = anchor;
    group.marks.reserve(refs.size());
    std::map<std::string, std::size_t> tag_counts;
    std::vector<std::string> tag_order;
    for (auto ref : refs) {
        group.marks.push_back(build_mark(scene, ref));
        const auto& tag = scene.element(ref).tag;
        if (tag_counts[tag]++ == 0)
            tag_order.push_back(tag);
    }
    // majority tag; ties go to the tag seen first
    std::size_t best = 0;
    for (const auto& tag : tag_order) {
        if (tag_counts[tag] > best) {
            best = tag_counts[tag];
            group.mark_tag = tag;
        }
    }
    return group;
}

// ─── Binding ────────────────────────────────────────────────────────────────

BindResult bind_data(const MarkGroup& group, const std::vector<Json>& dataset, const std::optional<std::string>& key)
{
    BindResult result;
    std::vector<bool> row_taken(dataset.size(), false);
    std::vector<bool> mark_taken(group.marks.size(), false);
    std::vector<std::string> row_keys(dataset.size());

    if (key) {
        std::map<std::string, std::size_t> by_key;
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            const Json* value = resolve_field(dataset[i], *key);
            if (!value)
                throw Error(Errc::SchemaError, "data row " + std::to_string(i) + " has no field '" + *key + "'");
            row_keys[i] = canonical_key(*value);
            if (!by_key.emplace(row_keys[i], i).second)
                throw Error(Errc::AmbiguousKey, "key '" + row_keys[i] + "' appears more than once in field '" + *key + "'");
        }
        for (std::size_t m = 0; m < group.marks.size(); ++m) {
            const auto& datum = group.marks[m].datum;
            if (!datum)
                continue;
            const Json* value = resolve_field(*datum, *key);
            if (!value)
                continue;
            mark_taken[m] = true; // a keyed mark never falls back to position
            auto it = by_key.find(canonical_key(*value));
            if (it == by_key.end() || row_taken[it->second]) {
                result.report.extra.push_back(m);
                continue;
            }
            row_taken[it->second] = true;
            result.pairs.push_back({m, it->second});
        }
    } else {
        for (std::size_t i = 0; i < dataset.size(); ++i)
            row_keys[i] = dataset[i].dump();
    }

    // Positional fallback for marks without a usable datum.
    std::vector<std::size_t> loose;
    for (std::size_t m = 0; m < group.marks.size(); ++m)
        if (!mark_taken[m])
            loose.push_back(m);
    std::stable_sort(loose.begin(), loose.end(), [&](std::size_t lhs, std::size_t rhs) {
        const auto& a = group.marks[lhs].geometry;
        const auto& b = group.marks[rhs].geometry;
        if (!a || !b)
            return a.has_value() && !b.has_value(); // marks without geometry go last
        if (a->x != b->x)
            return a->x < b->x;
        return a->y < b->y;
    });
    std::size_t next_row = 0;
    for (auto m : loose) {
        while (next_row < dataset.size() && row_taken[next_row])
            ++next_row;
        if (next_row == dataset.size()) {
            result.report.extra.push_back(m);
            continue;
        }
        row_taken[next_row] = true;
        result.pairs.push_back({m, next_row});
    }

    std::sort(result.pairs.begin(), result.pairs.end(), [](const MatchedPair& a, const MatchedPair& b) { return a.mark < b.mark; });
    std::sort(result.report.extra.begin(), result.report.extra.end());
    result.report.expected = dataset.size();
    result.report.plotted = result.pairs.size();
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (!row_taken[i]) {
            result.report.missing.push_back(dataset[i]);
            result.report.missing_keys.push_back(row_keys[i]);
        }
    }
    return result;
}

CompletenessVerdict check_completeness(const CompletenessReport& report, const std::vector<std::string>& allow_missing)
{
    std::vector<std::string> missing;
    for (const auto& key : report.missing_keys)
        if (std::find(allow_missing.begin(), allow_missing.end(), key) == allow_missing.end())
            missing.push_back(key);

    CompletenessVerdict verdict;
    verdict.passed = missing.empty() && report.extra.empty();
    if (verdict.passed) {
        verdict.message = "all " + std::to_string(report.plotted) + " data rows are plotted";
        return verdict;
    }
    std::ostringstream msg;
    if (!missing.empty()) {
        msg << missing.size() << " of " << report.expected << " data rows not plotted: ";
        for (std::size_t i = 0; i < missing.size(); ++i)
            msg << (i ? ", " : "") << missing[i];
    }
    if (!report.extra.empty()) {
        if (!missing.empty())
            msg << "; ";
        msg << report.extra.size() << " extra mark" << (report.extra.size() == 1 ? "" : "s")
            << " not bound to any data row";
    }
    verdict.message = msg.str();
    return verdict;
}

// ─── Scale inference ────────────────────────────────────────────────────────

std::string_view to_string(ScaleKind kind)
{
    switch (kind) {
    case ScaleKind::Linear: return "linear";
    case ScaleKind::Log: return "log";
    case ScaleKind::Ordinal: return "ordinal";
    case ScaleKind::Band: return "band";
    }
    return "unknown";
}

std::optional<ScaleKind> parse_scale_kind(std::string_view text)
{
    for (auto kind : {ScaleKind::Linear, ScaleKind::Log, ScaleKind::Ordinal, ScaleKind::Band})
        if (to_string(kind) == text)
            return kind;
    return std::nullopt;
}

bool is_positional_channel(std::string_view channel)
{
    return channel == "x" || channel == "y" || channel == "cx" || channel == "cy";
}

namespace {

struct Fit {
    double slope = 0;
    double intercept = 0;
    double rmse = 0;
};

// Least squares on mean-centered data; points must be pre-sorted so the
// result does not depend on input order.
std::optional<Fit> least_squares(const std::vector<std::pair<double, double>>& points)
{
    const double n = static_cast<double>(points.size());
    double mean_x = 0, mean_y = 0;
    for (const auto& [x, y] : points) {
        mean_x += x;
        mean_y += y;
    }
    mean_x /= n;
    mean_y /= n;
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if (!(sxx > 0))
        return std::nullopt;
    Fit fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    double ss = 0;
    for (const auto& [x, y] : points) {
        double r = y - (fit.slope * x + fit.intercept);
        ss += r * r;
    }
    fit.rmse = std::sqrt(ss / n);
    return fit;
}

double normalized(double rmse, const std::vector<double>& channel)
{
    auto [lo, hi] = std::minmax_element(channel.begin(), channel.end());
    double range = *hi - *lo;
    return range > 1e-12 ? rmse / range : rmse;
}

bool same_channel_value(const ChannelValue& a, const ChannelValue& b, double tolerance)
{
    if (a.index() != b.index())
        return false;
    if (auto x = std::get_if<double>(&a))
        return std::abs(*x - std::get<double>(b)) <= tolerance;
    return a == b;
}

std::optional<OrdinalParams> ordinal_fit(const std::vector<ScalePair>& pairs, double tolerance)
{
    std::map<std::string, std::vector<ChannelValue>> groups;
    for (const auto& p : pairs)
        groups[canonical_key(p.field_value)].push_back(p.channel_value);
    OrdinalParams params;
    for (const auto& [key, values] : groups) {
        for (const auto& v : values)
            if (!same_channel_value(v, values.front(), tolerance))
                return std::nullopt;
        if (std::holds_alternative<double>(values.front())) {
            double sum = 0;
            for (const auto& v : values)
                sum += std::get<double>(v);
            params.table[key] = sum / static_cast<double>(values.size());
        } else {
            params.table[key] = values.front();
        }
    }
    return params;
}

struct BandFit {
    BandParams params;
    double residual = 0;
};

std::optional<BandFit> band_fit(const std::vector<ScalePair>& pairs, double tolerance)
{
    std::vector<double> extents;
    std::map<std::string, std::vector<double>> positions;
    std::vector<double> channel;
    for (const auto& p : pairs) {
        auto pos = std::get_if<double>(&p.channel_value);
        if (!pos || !p.extent || !(*p.extent > 0))
            return std::nullopt;
        extents.push_back(*p.extent);
        channel.push_back(*pos);
        positions[canonical_key(p.field_value)].push_back(*pos);
    }
    if (positions.size() < 2)
        return std::nullopt;

    std::sort(extents.begin(), extents.end());
    double bandwidth = std::accumulate(extents.begin(), extents.end(), 0.0) / static_cast<double>(extents.size());
    for (double e : extents)
        if (std::abs(e - bandwidth) > tolerance)
            return std::nullopt;

    std::vector<std::pair<double, std::string>> bands;
    for (auto& [key, values] : positions) {
        std::sort(values.begin(), values.end());
        double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        for (double v : values)
            if (std::abs(v - mean) > tolerance)
                return std::nullopt;
        bands.emplace_back(mean, key);
    }
    std::sort(bands.begin(), bands.end());

    std::vector<std::pair<double, double>> index_to_pos;
    for (std::size_t i = 0; i < bands.size(); ++i)
        index_to_pos.emplace_back(static_cast<double>(i), bands[i].first);
    auto fit = least_squares(index_to_pos);
    if (!fit || !(fit->slope > tolerance))
        return std::nullopt;

    BandFit out;
    out.params.step = fit->slope;
    out.params.origin = fit->intercept;
    out.params.bandwidth = bandwidth;
    double ss = 0;
    for (const auto& p : pairs) {
        double pos = std::get<double>(p.channel_value);
        auto it = std::find_if(bands.begin(), bands.end(), [&](const auto& b) { return b.second == canonical_key(p.field_value); });
        double expected = fit->intercept + fit->slope * static_cast<double>(it - bands.begin());
        if (std::abs(pos - expected) > tolerance)
            return std::nullopt;
        ss += (pos - expected) * (pos - expected);
    }
    for (const auto& b : bands)
        out.params.domain.push_back(b.second);
    out.residual = normalized(std::sqrt(ss / static_cast<double>(pairs.size())), channel);
    return out;
}

} // namespace

ScaleModel infer_scale(const std::vector<ScalePair>& pairs, const std::string& field, const std::string& channel,
    const ScaleThresholds& thresholds)
{
    if (pairs.empty())
        throw Error(Errc::InsufficientData, "no (" + field + ", " + channel + ") pairs to fit");

    ScaleModel model;
    model.field = field;
    model.channel = channel;

    bool numeric_field = true;
    bool numeric_pairs = true;
    std::vector<std::pair<double, double>> numeric;
    for (const auto& p : pairs) {
        auto x = json_to_number(p.field_value);
        auto y = std::get_if<double>(&p.channel_value);
        numeric_field = numeric_field && x.has_value();
        numeric_pairs = numeric_pairs && x.has_value() && y != nullptr;
        if (numeric_pairs)
            numeric.emplace_back(*x, *y);
    }

    if (numeric_pairs && numeric.size() >= 3) {
        std::sort(numeric.begin(), numeric.end());
        std::vector<double> channel_values;
        for (const auto& pt : numeric)
            channel_values.push_back(pt.second);

        if (auto fit = least_squares(numeric)) {
            double residual = normalized(fit->rmse, channel_values);
            if (residual <= thresholds.max_residual) {
                model.params = LinearParams{fit->slope, fit->intercept};
                model.residual = residual;
                return model;
            }
        }
        if (std::all_of(numeric.begin(), numeric.end(), [](const auto& pt) { return pt.first > 0; })) {
            std::vector<std::pair<double, double>> logged;
            for (const auto& [x, y] : numeric)
                logged.emplace_back(std::log10(x), y);
            if (auto fit = least_squares(logged)) {
                double residual = normalized(fit->rmse, channel_values);
                if (residual <= thresholds.max_residual) {
                    model.params = LogParams{10.0, fit->slope, fit->intercept};
                    model.residual = residual;
                    return model;
                }
            }
        }
    }

    if (is_positional_channel(channel)) {
        if (auto band = band_fit(pairs, thresholds.band_tolerance_px)) {
            model.params = band->params;
            model.residual = band->residual;
            return model;
        }
    }

    if (auto ordinal = ordinal_fit(pairs, thresholds.band_tolerance_px)) {
        model.params = std::move(*ordinal);
        model.residual = 0;
        return model;
    }

    if (numeric_field && pairs.size() < 3)
        throw Error(Errc::InsufficientData, "numeric scale needs at least 3 pairs, got " + std::to_string(pairs.size()));
    throw Error(Errc::NoFit, "no linear, log, band or ordinal scale explains " + field + " -> " + channel);
}

std::vector<ScalePair> scale_pairs(const MarkGroup& group, const BindResult& binding, const std::vector<Json>& dataset,
    const std::string& field, const std::string& channel)
{
    std::vector<ScalePair> out;
    for (const auto& match : binding.pairs) {
        const auto& mark = group.marks.at(match.mark);
        const Json* value = resolve_field(dataset.at(match.row), field);
        if (!value && mark.datum)
            value = resolve_field(*mark.datum, field);
        auto channel_value = mark.channels.find(channel);
        if (!value || channel_value == mark.channels.end())
            continue;

        ScalePair pair{*value, channel_value->second, std::nullopt};
        if (channel == "x")
            pair.extent = mark.number("width");
        else if (channel == "y")
            pair.extent = mark.number("height");
        if (!pair.extent && mark.geometry && is_positional_channel(channel))
            pair.extent = (channel == "x" || channel == "cx") ? mark.geometry->w : mark.geometry->h;
        out.push_back(std::move(pair));
    }
    return out;
}

} // namespace vizgrade
