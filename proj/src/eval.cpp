#include "lagnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <tuple>

#include "lagnet/error.hpp"
#include "lagnet/serialize.hpp"

namespace lagnet {

double sse(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) {
        throw ValidationError("sse: length mismatch (" + std::to_string(actual.size()) + " vs " +
                              std::to_string(predicted.size()) + ")");
    }
    if (actual.empty()) throw ValidationError("sse: empty vectors");
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - predicted[i];
        s += e * e;
    }
    return s;
}

double r_squared(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) {
        throw ValidationError("r_squared: length mismatch (" + std::to_string(actual.size()) +
                              " vs " + std::to_string(predicted.size()) + ")");
    }
    if (actual.size() < 2) throw ValidationError("r_squared needs at least two points");
    const double mean =
        std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(actual.size());
    double sst = 0.0;
    for (double a : actual) sst += (a - mean) * (a - mean);
    if (!(sst > 0.0)) throw ValidationError("r_squared: actual values are constant");
    return 1.0 - sse(actual, predicted) / sst;
}

std::string_view to_string(ModelKind k) { return k == ModelKind::nn ? "nn" : "arimax"; }

ComparisonTable compare(std::vector<ComparisonRow> rows) {
    if (rows.empty()) throw ValidationError("comparison needs at least one model");
    for (const auto& r : rows) {
        if (r.test_start != rows.front().test_start || r.test_length != rows.front().test_length) {
            throw ValidationError("models '" + rows.front().label + "' and '" + r.label +
                                  "' were evaluated on different test windows");
        }
    }
    auto key = [](const ComparisonRow& r) {
        return std::make_tuple(r.metrics.sse_test, r.n_params, std::cref(r.label),
                               std::cref(r.activations));
    };
    std::stable_sort(rows.begin(), rows.end(),
                     [&](const ComparisonRow& a, const ComparisonRow& b) { return key(a) < key(b); });
    return {std::move(rows), 0};
}

ComparisonRow comparison_row(const FitReport& report, std::size_t test_start,
                             std::size_t test_length) {
    ComparisonRow row;
    row.label = report.order;
    row.kind = ModelKind::nn;
    row.activations = report.activations;
    row.n_params = report.n_params;
    row.metrics = {report.sse_train, report.sse_test_onestep.value_or(0.0), report.r_squared};
    row.sse_test_iterated = report.sse_test_iterated;
    row.bic = report.bic;
    row.seed = report.seed;
    row.test_start = test_start;
    row.test_length = test_length;
    return row;
}

ComparisonRow comparison_row(const ArimaFit& fit, double sse_test_onestep,
                             double sse_test_iterated, std::size_t test_start,
                             std::size_t test_length) {
    ComparisonRow row;
    row.label = fit.spec.label();
    row.kind = ModelKind::arimax;
    row.n_params = fit.spec.parameter_count();
    row.metrics = {fit.sse, sse_test_onestep, fit.r_squared};
    row.sse_test_iterated = sse_test_iterated;
    if (fit.sse > 0.0 && fit.n_used > 0) row.bic = bic(fit.n_used, fit.sse, row.n_params);
    row.test_start = test_start;
    row.test_length = test_length;
    return row;
}

std::string render_csv(const ComparisonTable& table) {
    std::ostringstream out;
    out << "model_kind,order,n_params,activations,r_squared,sse_train,sse_test_onestep,"
           "sse_test_iterated,bic,seed\n";
    for (const auto& r : table.rows) {
        out << to_string(r.kind) << ',' << csv_field(r.label) << ',' << r.n_params << ','
            << csv_field(r.activations) << ',' << format_number(r.metrics.r_squared) << ','
            << format_number(r.metrics.sse_train) << ',' << format_number(r.metrics.sse_test)
            << ',' << format_optional(r.sse_test_iterated) << ',' << format_optional(r.bic) << ','
            << r.seed << '\n';
    }
    return out.str();
}

namespace {

std::string truncated4(double v) {
    if (!std::isfinite(v)) return format_number(v);
    const double t = std::trunc(v * 1e4) / 1e4;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", t);
    return buf;
}

std::string fixed2(std::optional<double> v) {
    if (!v) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return buf;
}

}  // namespace

std::string render_text(const ComparisonTable& table) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"", "model", "kind", "params", "activations", "R2", "SSE train",
                     "SSE test", "SSE iter", "BIC"});
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        cells.push_back({i == table.winner ? "*" : "", r.label, std::string(to_string(r.kind)),
                         std::to_string(r.n_params), r.activations.empty() ? "-" : r.activations,
                         truncated4(r.metrics.r_squared), fixed2(r.metrics.sse_train),
                         fixed2(r.metrics.sse_test), fixed2(r.sse_test_iterated), fixed2(r.bic)});
    }
    std::vector<std::size_t> width(cells.front().size(), 0);
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    for (const auto& row : cells) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) line += "  ";
            const std::string& s = row[c];
            // Numbers right-aligned, text left-aligned.
            if (c >= 3 && c != 4) {
                line += std::string(width[c] - s.size(), ' ') + s;
            } else {
                line += s + std::string(width[c] - s.size(), ' ');
            }
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out << line << '\n';
    }
    out << "winner: " << table.winner_row().label;
    if (!table.winner_row().activations.empty()) out << " " << table.winner_row().activations;
    out << '\n';
    return out.str();
}

}  // namespace lagnet
