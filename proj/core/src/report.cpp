#include <cstdio>
#include <fstream>

#include "cloudsample/io.hpp"

namespace cloudsample::io {

namespace {

std::string fixed(double v, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", decimals, v);
  return buffer;
}

std::string optional_count(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

struct Cells {
  std::string n_in, n_out, oa, k, t_batch, t_sample, acc, prec, rec, f1;
};

Cells cells(const RunRecord& r, bool percent) {
  Cells c{std::to_string(r.n_in), std::to_string(r.n_out), optional_count(r.oa_layers),
          optional_count(r.k),    fixed(r.time_per_batch_s, 6), fixed(r.time_per_sample_s, 6),
          {}, {}, {}, {}};
  if (r.metrics) {
    auto pct = [&](double v) { return percent ? fixed(100 * v, 2) + "%" : fixed(v, 6); };
    c.acc = pct(r.metrics->accuracy);
    c.prec = pct(r.metrics->precision);
    c.rec = pct(r.metrics->recall);
    c.f1 = fixed(r.metrics->f1, percent ? 4 : 6);
  }
  return c;
}

}  // namespace

ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "markdown" || text == "md") return ReportFormat::Markdown;
  throw Error(Errc::InvalidConfig, "unknown report format '" + text + "'");
}

std::string format_report(std::span<const RunRecord> records, ReportFormat format) {
  if (records.empty()) throw Error(Errc::InvalidConfig, "no records to report");
  std::string out;
  if (format == ReportFormat::Csv) {
    out += kReportHeader;
    out += '\n';
    for (const auto& r : records) {
      const Cells c = cells(r, false);
      out += r.method + ',' + c.n_in + ',' + c.n_out + ',' + c.oa + ',' + c.k + ',' + c.t_batch +
             ',' + c.t_sample + ',' + c.acc + ',' + c.prec + ',' + c.rec + ',' + c.f1 + '\n';
    }
    return out;
  }
  out += "| Method | Input points | Output points | OA | k | Time per batch (s) | "
         "Time per sample (s) | Acc | Prec | Rec | F1 |\n";
  out += "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const bool first_of_block = i == 0 || records[i - 1].method != r.method;
    const Cells c = cells(r, true);
    out += "| " + (first_of_block ? r.method : std::string()) + " | " + c.n_in + " | " +
           c.n_out + " | " + c.oa + " | " + c.k + " | " + c.t_batch + " | " + c.t_sample +
           " | " + c.acc + " | " + c.prec + " | " + c.rec + " | " + c.f1 + " |\n";
  }
  return out;
}

void write_report(std::span<const RunRecord> records, ReportFormat format,
                  const std::filesystem::path& path) {
  const std::string text = format_report(records, format);
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

}  // namespace cloudsample::io
