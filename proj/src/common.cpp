#include "chartagent/common.hpp"

#include <cmath>

namespace chartagent {

std::string to_string(ChartType t) {
    switch (t) {
        case ChartType::bar: return "bar";
        case ChartType::line: return "line";
        case ChartType::pie: return "pie";
        case ChartType::donut: return "donut";
        case ChartType::scatter: return "scatter";
        case ChartType::unknown: return "unknown";
    }
    return "unknown";
}

ChartType chart_type_from_string(const std::string& s) {
    if (s == "bar") return ChartType::bar;
    if (s == "line") return ChartType::line;
    if (s == "pie") return ChartType::pie;
    if (s == "donut") return ChartType::donut;
    if (s == "scatter") return ChartType::scatter;
    if (s == "unknown") return ChartType::unknown;
    fail("UnsupportedChartType", "not a chart type: " + s);
}

double Rng::gaussian() {
    // Box-Muller without caching the spare so the stream layout stays a
    // pure function of the call count.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

uint64_t mix_seed(uint64_t a, uint64_t b) {
    // splitmix64 finalizer over the combined words
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string to_string(TextRole r) {
    switch (r) {
        case TextRole::title: return "title";
        case TextRole::tick_label: return "tick_label";
        case TextRole::legend_label: return "legend_label";
        case TextRole::value_label: return "value_label";
    }
    return "tick_label";
}

TextRole text_role_from_string(const std::string& s) {
    if (s == "title") return TextRole::title;
    if (s == "tick_label") return TextRole::tick_label;
    if (s == "legend_label") return TextRole::legend_label;
    if (s == "value_label") return TextRole::value_label;
    fail("SchemaViolation", "unknown text role: " + s);
}

}  // namespace chartagent
