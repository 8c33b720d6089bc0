#include "lagnet/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lagnet/error.hpp"

namespace lagnet {

namespace {

constexpr std::array<const char*, 6> palette{"#1f1f1f", "#d62728", "#1f77b4",
                                             "#2ca02c", "#9467bd", "#ff7f0e"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '"':
                out += "&quot;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

}  // namespace

void PlotSpec::validate() const {
    if (actual.empty()) throw ValidationError("plot series are empty");
    if (predicted.empty()) throw ValidationError("plot needs at least one predicted series");
    for (const auto& p : predicted) {
        if (p.size() != actual.size()) {
            throw ValidationError("plot series lengths differ (" + std::to_string(actual.size()) +
                                  " vs " + std::to_string(p.size()) + ")");
        }
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(actual.begin(), actual.end(), finite)) {
        throw ValidationError("plot series contain non-finite values");
    }
    for (const auto& p : predicted) {
        if (!std::all_of(p.begin(), p.end(), finite)) {
            throw ValidationError("plot series contain non-finite values");
        }
    }
    if (width < 200 || height < 150) throw ValidationError("plot is too small");
}

std::string render_svg(const PlotSpec& spec) {
    spec.validate();
    const double left = 70.0;
    const double right = 20.0;
    const double top = spec.title.empty() ? 20.0 : 40.0;
    const double bottom = 40.0 + 18.0 * static_cast<double>(spec.predicted.size() + 1);
    const double plot_w = spec.width - left - right;
    const double plot_h = spec.height - top - bottom;

    double lo = spec.actual.front();
    double hi = lo;
    auto extend = [&](const std::vector<double>& v) {
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    };
    extend(spec.actual);
    for (const auto& p : spec.predicted) extend(p);
    if (hi == lo) {
        hi += 0.5;
        lo -= 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const std::size_t n = spec.actual.size();
    const double x_span = n > 1 ? static_cast<double>(n - 1) : 1.0;
    auto px = [&](std::size_t i) { return left + plot_w * static_cast<double>(i) / x_span; };
    auto py = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
        << spec.height << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\"" << spec.height
        << "\" fill=\"#ffffff\"/>\n";
    if (!spec.title.empty()) {
        out << "<text x=\"" << fmt(spec.width / 2.0)
            << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
            << escape_xml(spec.title) << "</text>\n";
    }
    // Axes.
    out << "<g stroke=\"#888888\" stroke-width=\"1\">\n";
    out << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(left)
        << "\" y2=\"" << fmt(top + plot_h) << "\"/>\n";
    out << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top + plot_h) << "\" x2=\""
        << fmt(left + plot_w) << "\" y2=\"" << fmt(top + plot_h) << "\"/>\n";
    out << "</g>\n";
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#444444\">\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        out << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(py(v) + 4)
            << "\" text-anchor=\"end\">" << fmt_tick(v) << "</text>\n";
    }
    out << "<text x=\"" << fmt(left) << "\" y=\"" << fmt(top + plot_h + 16)
        << "\" text-anchor=\"start\">1</text>\n";
    out << "<text x=\"" << fmt(left + plot_w) << "\" y=\"" << fmt(top + plot_h + 16)
        << "\" text-anchor=\"end\">" << n << "</text>\n";
    out << "</g>\n";

    auto polyline = [&](const std::vector<double>& v, const char* colour) {
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i > 0) out << ' ';
            out << fmt(px(i)) << ',' << fmt(py(v[i]));
        }
        out << "\"/>\n";
    };
    polyline(spec.actual, palette[0]);
    for (std::size_t s = 0; s < spec.predicted.size(); ++s) {
        polyline(spec.predicted[s], palette[(s + 1) % palette.size()]);
    }

    // Legend.
    out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    double ly = top + plot_h + 34;
    auto legend = [&](const std::string& label, const char* colour) {
        out << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
            << fmt(left + 24) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << colour
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << fmt(left + 30) << "\" y=\"" << fmt(ly) << "\">" << escape_xml(label)
            << "</text>\n";
        ly += 18;
    };
    legend(spec.actual_label, palette[0]);
    for (std::size_t s = 0; s < spec.predicted.size(); ++s) {
        const std::string label = s < spec.predicted_labels.size()
                                      ? spec.predicted_labels[s]
                                      : "predicted " + std::to_string(s + 1);
        legend(label, palette[(s + 1) % palette.size()]);
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

void emit_plot(const PlotSpec& spec, const std::filesystem::path& path) {
    const std::string svg = render_svg(spec);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write plot to '" + path.string() + "'");
    f << svg;
    if (!f) throw ValidationError("failed writing plot to '" + path.string() + "'");
}

}  // namespace lagnet
