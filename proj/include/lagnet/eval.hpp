#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lagnet/arima.hpp"
#include "lagnet/select.hpp"

namespace lagnet {

double sse(std::span<const double> actual, std::span<const double> predicted);
double r_squared(std::span<const double> actual, std::span<const double> predicted);

struct MetricPair {
    double sse_train = 0.0;
    double sse_test = 0.0;  // one-step headline
    double r_squared = 0.0;
};

enum class ModelKind { nn, arimax };

std::string_view to_string(ModelKind k);

struct ComparisonRow {
    std::string label;
    ModelKind kind = ModelKind::nn;
    std::string activations;  // empty for ARIMAX
    std::size_t n_params = 0;
    MetricPair metrics;
    std::optional<double> sse_test_iterated;
    std::optional<double> bic;
    std::uint64_t seed = 0;
    // Test window as [start, start + length) in series time.
    std::size_t test_start = 0;
    std::size_t test_length = 0;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;  // sorted by rank
    std::size_t winner = 0;           // index into rows (always 0 after ranking)

    const ComparisonRow& winner_row() const { return rows.at(winner); }
};

// Ranks by one-step test SSE, then fewer parameters, then label. All rows must
// share one test window.
ComparisonTable compare(std::vector<ComparisonRow> rows);

ComparisonRow comparison_row(const FitReport& report, std::size_t test_start,
                             std::size_t test_length);
ComparisonRow comparison_row(const ArimaFit& fit, double sse_test_onestep,
                             double sse_test_iterated, std::size_t test_start,
                             std::size_t test_length);

// Columns: model_kind, order, n_params, activations, r_squared, sse_train,
// sse_test_onestep, sse_test_iterated, bic, seed.
std::string render_csv(const ComparisonTable& table);
// Aligned text with R^2 at four decimals; the winner is marked with '*'.
std::string render_text(const ComparisonTable& table);

}  // namespace lagnet
