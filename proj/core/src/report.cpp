#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "bytes.hpp"
#include "colgrade/pipeline.hpp"

namespace colgrade {

namespace {

constexpr const char* kPalette[6] = {"#4e79a7", "#f28e2b", "#e15759",
                                     "#76b7b2", "#59a14f", "#edc948"};

constexpr Scheme kSchemeOrder[6] = {Scheme::raw, Scheme::roi, Scheme::roi_m,
                                    Scheme::dae, Scheme::hog, Scheme::lbp};

int mode_rank(const std::string& mode) {
  if (mode == "three_class") return 0;
  if (mode == "cascaded_stage") return 1;
  if (mode == "cascaded_final") return 2;
  return 3;
}

int classifier_rank(const std::string& name) {
  if (name == "cnn") return 0;
  if (name == "knn") return 1;
  if (name == "rf") return 2;
  if (name == "svm") return 3;
  return 4;
}

std::string num(double v, int prec) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

struct TableKey {
  std::string mode;
  std::string classifier;

  bool operator<(const TableKey& o) const {
    return std::tuple(mode_rank(mode), mode, classifier_rank(classifier),
                      classifier) < std::tuple(mode_rank(o.mode), o.mode,
                                               classifier_rank(o.classifier),
                                               o.classifier);
  }
};

}  // namespace

ReportFiles report_emit(const std::vector<ReportRow>& rows,
                        const std::string& dir) {
  if (rows.empty()) throw DataError("report: no rows");

  std::map<TableKey, std::map<int, const EvalReport*>> table;
  bool scheme_present[6] = {};
  for (const auto& row : rows) {
    const int si = static_cast<int>(row.scheme);
    auto& cells = table[{row.report.mode, row.classifier}];
    if (!cells.emplace(si, &row.report).second)
      throw DataError("report: duplicate cell: " + row.report.mode + "/" +
                      row.classifier + "/" + scheme_name(row.scheme));
    scheme_present[si] = true;
  }

  std::vector<int> cols;
  for (Scheme s : kSchemeOrder)
    if (scheme_present[static_cast<int>(s)]) cols.push_back(static_cast<int>(s));

  std::string csv = "mode,classifier";
  for (int c : cols) csv += "," + scheme_name(static_cast<Scheme>(c));
  csv += "\n";
  for (const auto& [key, cells] : table) {
    csv += key.mode + "," + key.classifier;
    for (int c : cols) {
      csv += ",";
      const auto it = cells.find(c);
      if (it != cells.end())
        csv += format_cell(it->second->mean, it->second->stddev);
    }
    csv += "\n";
  }

  // Grouped bars: one group per table row, one bar per scheme, whiskers at
  // mean +- std clamped to [0, 1]. Only literals and %.1f go into the
  // markup, keeping reruns byte-identical.
  const double bar_w = 16.0, bar_gap = 2.0, group_gap = 28.0;
  const double plot_h = 200.0, left = 46.0, top = 42.0, bottom = 96.0;
  const double group_w =
      cols.size() * bar_w + (cols.size() - 1) * bar_gap + group_gap;
  const double plot_w = table.size() * group_w;
  const double width = left + plot_w + 16.0;
  const double height = top + plot_h + bottom;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width, 1) +
         "\" height=\"" + num(height, 1) + "\" viewBox=\"0 0 " +
         num(width, 1) + " " + num(height, 1) + "\">\n";
  svg += "<rect width=\"" + num(width, 1) + "\" height=\"" + num(height, 1) +
         "\" fill=\"#ffffff\"/>\n";
  svg +=
      "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";

  for (int t = 0; t <= 4; ++t) {
    const double frac = t * 0.25;
    const double y = top + plot_h * (1.0 - frac);
    svg += "<line x1=\"" + num(left, 1) + "\" y1=\"" + num(y, 1) + "\" x2=\"" +
           num(left + plot_w, 1) + "\" y2=\"" + num(y, 1) +
           "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + num(left - 6.0, 1) + "\" y=\"" + num(y + 3.5, 1) +
           "\" text-anchor=\"end\">" + num(frac, 2) + "</text>\n";
  }

  std::size_t g = 0;
  for (const auto& [key, cells] : table) {
    const double gx = left + g * group_w;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto it = cells.find(cols[j]);
      if (it == cells.end()) continue;
      const EvalReport& r = *it->second;
      const double x = gx + j * (bar_w + bar_gap);
      const double h = plot_h * std::clamp(r.mean, 0.0, 1.0);
      svg += "<rect x=\"" + num(x, 1) + "\" y=\"" + num(top + plot_h - h, 1) +
             "\" width=\"" + num(bar_w, 1) + "\" height=\"" + num(h, 1) +
             "\" fill=\"" + kPalette[cols[j]] + "\"/>\n";
      const double lo = std::clamp(r.mean - r.stddev, 0.0, 1.0);
      const double hi = std::clamp(r.mean + r.stddev, 0.0, 1.0);
      const double cx = x + bar_w / 2.0;
      svg += "<line x1=\"" + num(cx, 1) + "\" y1=\"" +
             num(top + plot_h * (1.0 - lo), 1) + "\" x2=\"" + num(cx, 1) +
             "\" y2=\"" + num(top + plot_h * (1.0 - hi), 1) +
             "\" stroke=\"#333333\"/>\n";
    }
    const double label_x = gx + (group_w - group_gap) / 2.0;
    const double label_y = top + plot_h + 14.0;
    svg += "<text x=\"" + num(label_x, 1) + "\" y=\"" + num(label_y, 1) +
           "\" text-anchor=\"end\" transform=\"rotate(-35 " +
           num(label_x, 1) + " " + num(label_y, 1) + ")\">" + key.classifier +
           " / " + key.mode + "</text>\n";
    ++g;
  }

  double lx = left;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    svg += "<rect x=\"" + num(lx, 1) + "\" y=\"14.0\" width=\"12.0\" " +
           "height=\"12.0\" fill=\"" + kPalette[cols[j]] + "\"/>\n";
    svg += "<text x=\"" + num(lx + 16.0, 1) + "\" y=\"24.0\">" +
           scheme_name(static_cast<Scheme>(cols[j])) + "</text>\n";
    lx += 76.0;
  }

  svg += "<line x1=\"" + num(left, 1) + "\" y1=\"" + num(top, 1) +
         "\" x2=\"" + num(left, 1) + "\" y2=\"" + num(top + plot_h, 1) +
         "\" stroke=\"#333333\"/>\n";
  svg += "<line x1=\"" + num(left, 1) + "\" y1=\"" + num(top + plot_h, 1) +
         "\" x2=\"" + num(left + plot_w, 1) + "\" y2=\"" +
         num(top + plot_h, 1) + "\" stroke=\"#333333\"/>\n";
  svg += "</g>\n</svg>\n";

  std::filesystem::create_directories(dir);
  ReportFiles files;
  files.csv = (std::filesystem::path(dir) / "results.csv").string();
  files.svg = (std::filesystem::path(dir) / "results.svg").string();
  bytes::write_file(files.csv, csv, "report");
  bytes::write_file(files.svg, svg, "report");
  return files;
}

}  // namespace colgrade
