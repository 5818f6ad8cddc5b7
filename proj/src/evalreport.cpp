#include "txtopo/evalreport.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "txtopo/errors.hpp"

namespace txtopo {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void refresh_diag_flags(ReconstructionReport& r) {
  for (int p = 0; p < kPatternCount; ++p) {
    const auto pi = static_cast<std::size_t>(p);
    bool is_min = !r.absent(p, p);
    for (int q = 0; q < kPatternCount && is_min; ++q) {
      if (q == p || r.absent(p, q)) continue;
      if (r.matrix[pi][static_cast<std::size_t>(q)] < r.matrix[pi][pi]) is_min = false;
    }
    r.diag_min[pi] = is_min;
  }
}

}  // namespace

ReconstructionReport cross_evaluate(
    std::array<GaeModel, kPatternCount>& models,
    const std::array<std::vector<ValSample>, kPatternCount>& val_sets) {
  ReconstructionReport report;
  report.variant = models[0].variant;
  for (int p = 0; p < kPatternCount; ++p) {
    if (models[static_cast<std::size_t>(p)].variant != report.variant) {
      throw DataError("cross_evaluate needs six models of one variant");
    }
    for (int q = 0; q < kPatternCount; ++q) {
      double total = 0.0;
      std::int64_t n = 0;
      for (const ValSample& s : val_sets[static_cast<std::size_t>(q)]) {
        total += reconstruction_error(models[static_cast<std::size_t>(p)],
                                      *s.community, *s.raw_features);
        ++n;
      }
      report.counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] = n;
      report.matrix[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] =
          n > 0 ? total / static_cast<double>(n) : std::nan("");
    }
  }
  refresh_diag_flags(report);
  return report;
}

std::optional<double> separability_margin(const ReconstructionReport& report, int row) {
  const auto p = static_cast<std::size_t>(row);
  if (report.absent(row, row)) return std::nullopt;
  double margin = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int q = 0; q < kPatternCount; ++q) {
    if (q == row || report.absent(row, q)) continue;
    margin = std::min(margin, report.matrix[p][static_cast<std::size_t>(q)] -
                                  report.matrix[p][p]);
    any = true;
  }
  if (!any) return std::nullopt;
  return margin;
}

std::array<std::optional<nn::Variant>, kPatternCount> select_best(
    const std::vector<ReconstructionReport>& reports) {
  std::array<std::optional<nn::Variant>, kPatternCount> best;
  for (int p = 0; p < kPatternCount; ++p) {
    double best_margin = -std::numeric_limits<double>::infinity();
    for (const ReconstructionReport& r : reports) {
      if (!r.diag_min[static_cast<std::size_t>(p)]) continue;
      const auto margin = separability_margin(r, p);
      if (!margin) continue;
      if (*margin > best_margin) {
        best_margin = *margin;
        best[static_cast<std::size_t>(p)] = r.variant;
      }
    }
  }
  return best;
}

void emit_report(const std::vector<ReconstructionReport>& reports,
                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  for (const ReconstructionReport& r : reports) {
    const auto path = out_dir / ("matrix_" + std::string(nn::variant_name(r.variant)) + ".csv");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "train_pattern";
    for (const Pattern q : kAllPatterns) out << ',' << pattern_name(q);
    out << '\n';
    for (int p = 0; p < kPatternCount; ++p) {
      out << pattern_name(static_cast<Pattern>(p));
      for (int q = 0; q < kPatternCount; ++q) {
        out << ',';
        if (r.absent(p, q)) {
          out << "absent";
        } else {
          out << fmt_double(r.matrix[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)]);
        }
      }
      out << '\n';
    }
  }

  {
    std::ofstream out(out_dir / "long.csv");
    if (!out) throw DataError("cannot write long.csv");
    out << "variant,train_pattern,eval_pattern,mean_error,n\n";
    for (const ReconstructionReport& r : reports) {
      for (int p = 0; p < kPatternCount; ++p) {
        for (int q = 0; q < kPatternCount; ++q) {
          out << nn::variant_name(r.variant) << ','
              << pattern_name(static_cast<Pattern>(p)) << ','
              << pattern_name(static_cast<Pattern>(q)) << ',';
          if (r.absent(p, q)) {
            out << "absent";
          } else {
            out << fmt_double(r.matrix[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)]);
          }
          out << ',' << r.counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] << '\n';
        }
      }
    }
  }

  {
    const auto best = select_best(reports);
    std::ofstream out(out_dir / "report.txt");
    if (!out) throw DataError("cannot write report.txt");
    for (const ReconstructionReport& r : reports) {
      out << "variant " << nn::variant_name(r.variant) << "\n";
      out << "  diagonal-minimum rows:";
      int hits = 0;
      for (int p = 0; p < kPatternCount; ++p) {
        if (r.diag_min[static_cast<std::size_t>(p)]) {
          out << ' ' << pattern_name(static_cast<Pattern>(p));
          ++hits;
        }
      }
      out << " (" << hits << "/" << kPatternCount << ")\n";
      for (int p = 0; p < kPatternCount; ++p) {
        const auto margin = separability_margin(r, p);
        out << "  " << pattern_name(static_cast<Pattern>(p)) << ": diag=";
        if (r.absent(p, p)) {
          out << "absent";
        } else {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.6f",
                        r.matrix[static_cast<std::size_t>(p)][static_cast<std::size_t>(p)]);
          out << buf;
        }
        out << " margin=";
        if (margin) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.6f", *margin);
          out << buf;
        } else {
          out << "absent";
        }
        out << '\n';
      }
    }
    out << "best variant per pattern\n";
    for (int p = 0; p < kPatternCount; ++p) {
      out << "  " << pattern_name(static_cast<Pattern>(p)) << ": ";
      if (best[static_cast<std::size_t>(p)]) {
        out << nn::variant_name(*best[static_cast<std::size_t>(p)]);
      } else {
        out << "none";
      }
      out << '\n';
    }
  }
}

ReconstructionReport read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  const std::string stem = path.stem().string();
  ReconstructionReport report;
  const auto prefix = std::string("matrix_");
  if (stem.rfind(prefix, 0) == 0) {
    const auto v = nn::variant_from_name(stem.substr(prefix.size()));
    if (v) report.variant = *v;
  }
  std::string line;
  std::getline(in, line);  // header
  int p = 0;
  while (std::getline(in, line) && p < kPatternCount) {
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');  // row label
    for (int q = 0; q < kPatternCount; ++q) {
      if (!std::getline(ss, field, ',')) throw DataError("short row in " + path.string());
      auto& cell = report.matrix[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
      auto& count = report.counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
      if (field == "absent") {
        cell = std::nan("");
        count = 0;
      } else {
        cell = std::stod(field);
        count = 1;  // presence only; true counts live in long.csv
      }
    }
    ++p;
  }
  if (p != kPatternCount) throw DataError("short matrix in " + path.string());
  refresh_diag_flags(report);
  return report;
}

}  // namespace txtopo
