#pragma once
// Plot-ready CSV emission for protocol traces, plus the reproduction
// manifest mapping preset -> figure -> parameters -> file.
//
// Schema (documented in README.md): one row per layer k = 0..L,
//   layer,beta,gamma,energy,e_p[,p0..p{B-1}][,n_meas_cum]
// where p0..p{B-1} appear when the run recorded energy-bin weights and
// n_meas_cum appears when a parallel-measurement scale factor was supplied
// (n_meas_cum = layer * factor).  Values are printed with %.12g: bit-stable
// on one platform, and stable to well below 1e-9 across platforms.  Files
// are written to a temporary sibling then renamed, so a curve either exists
// complete or not at all.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "protocol.hpp"

namespace cdfqa {

inline std::string format_csv_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct CsvOptions {
  int meas_factor = 0;  // > 0: append n_meas_cum = layer * factor
};

inline std::string trace_csv_text(const ProtocolTrace& trace,
                                  const CsvOptions& opts = {}) {
  std::string out = "layer,beta,gamma,energy,e_p";
  const std::size_t n_bins =
      trace.rows.empty() ? 0 : trace.rows.front().bin_weights.size();
  for (std::size_t b = 0; b < n_bins; ++b)
    out += ",p" + std::to_string(b);
  if (opts.meas_factor > 0) out += ",n_meas_cum";
  out += "\n";
  for (const LayerRecord& row : trace.rows) {
    out += std::to_string(row.layer_k);
    out += "," + format_csv_value(row.beta_k);
    out += "," + format_csv_value(row.gamma_k);
    out += "," + format_csv_value(row.energy);
    out += "," + format_csv_value(row.e_p);
    for (std::size_t b = 0; b < n_bins; ++b)
      out += "," + format_csv_value(row.bin_weights[b]);
    if (opts.meas_factor > 0)
      out += "," + std::to_string(static_cast<long>(row.layer_k) *
                                  opts.meas_factor);
    out += "\n";
  }
  return out;
}

// Writes text to path via a temporary sibling + rename.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

inline void write_trace_csv(const std::filesystem::path& path,
                            const ProtocolTrace& trace,
                            const CsvOptions& opts = {}) {
  write_file_atomic(path, trace_csv_text(trace, opts));
}

struct ManifestRow {
  std::string preset;      // preset name, or "config" for ad-hoc runs
  std::string figure;      // e.g. "fig5", or "-" when not tied to a figure
  std::string parameters;  // compact "key=value key=value" summary
  std::string file;        // path relative to the output root
};

// Tab-separated manifest, one row per emitted curve, written atomically.
inline void write_manifest(const std::filesystem::path& path,
                           const std::vector<ManifestRow>& rows) {
  std::string text = "preset\tfigure\tparameters\tfile\n";
  for (const ManifestRow& r : rows)
    text += r.preset + "\t" + r.figure + "\t" + r.parameters + "\t" + r.file +
            "\n";
  write_file_atomic(path, text);
}

// Compact parameter summary for manifest rows.
inline std::string describe_spec(const ProtocolSpec& spec) {
  std::string s = "N=" + std::to_string(spec.chain.n_sites);
  s += " J=" + format_csv_value(spec.chain.coupling_j);
  s += " hz=" + format_csv_value(spec.chain.field_hz);
  s += " hx=" + format_csv_value(spec.chain.field_hx);
  s += spec.chain.boundary == Boundary::periodic ? " periodic" : " open";
  s += " h1=" + spec.h1.text();
  s += " h_cd=" + spec.h_cd.text();
  s += " alpha=" + format_csv_value(spec.alpha);
  s += " dt=" + format_csv_value(spec.delta_t);
  s += " L=" + std::to_string(spec.n_layers);
  if (spec.h_add_enabled) s += " h_add=on";
  if (spec.mode == EvolutionMode::trotter1) s += " mode=trotter1";
  return s;
}

}  // namespace cdfqa
