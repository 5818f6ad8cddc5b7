#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "txtopo/gae.hpp"

namespace txtopo {

// Cross-pattern reconstruction-error matrix for one encoder variant. Entry
// (p,q) is the mean error of the model trained on pattern p over the
// validation set of pattern q; entries backed by zero communities are
// absent.
struct ReconstructionReport {
  nn::Variant variant = nn::Variant::GCN;
  std::array<std::array<double, kPatternCount>, kPatternCount> matrix{};
  std::array<std::array<std::int64_t, kPatternCount>, kPatternCount> counts{};
  std::array<bool, kPatternCount> diag_min{};

  bool absent(int p, int q) const { return counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] == 0; }
};

struct ValSample {
  const Community* community = nullptr;
  const Matrix* raw_features = nullptr;
};

// Six models of one variant against the six validation sets.
ReconstructionReport cross_evaluate(
    std::array<GaeModel, kPatternCount>& models,
    const std::array<std::vector<ValSample>, kPatternCount>& val_sets);

// Smallest gap between the row's off-diagonal entries and its diagonal;
// positive means the model separates its own pattern. Absent entries are
// skipped; returns nullopt when the diagonal itself is absent.
std::optional<double> separability_margin(const ReconstructionReport& report, int row);

// For each pattern, the variant whose diagonal is the row minimum with the
// widest margin; nullopt when no variant qualifies. Ties go to the earlier
// variant in GCN, SAGE, GAT order.
std::array<std::optional<nn::Variant>, kPatternCount> select_best(
    const std::vector<ReconstructionReport>& reports);

// Report bundle: matrix_<variant>.csv per report, a human-readable
// report.txt, and long-format rows in long.csv.
void emit_report(const std::vector<ReconstructionReport>& reports,
                 const std::filesystem::path& out_dir);

// Round-trips a matrix csv written by emit_report.
ReconstructionReport read_matrix_csv(const std::filesystem::path& path);

}  // namespace txtopo
