/**
 * @file report.hpp
 * @brief CSV/SVG rendering, checksums and atomic file output.
 */

#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "qmagsim/errors.hpp"
#include "qmagsim/polarimeter.hpp"

namespace qmagsim {

/// 9 significant digits, the precision of every emitted CSV value.
[[nodiscard]] inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
  return buf;
}

/// Two-column CSV, LF line endings.
[[nodiscard]] inline std::string xy_csv(std::string_view header, const std::vector<double>& xs,
                                        const std::vector<double>& ys) {
  std::string out(header);
  out += '\n';
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
    out += format_value(xs[i]);
    out += ',';
    out += format_value(ys[i]);
    out += '\n';
  }
  return out;
}

/// PSD export restricted to [f_lo, f_hi].
[[nodiscard]] inline std::string psd_csv(const Spectrum& psd, double f_lo, double f_hi) {
  std::vector<double> f;
  std::vector<double> a;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    const double fk = psd.frequency(k);
    if (fk < f_lo || fk > f_hi) continue;
    f.push_back(fk);
    a.push_back(psd.asd[k]);
  }
  return xy_csv("frequency_hz,asd_mrad_per_rthz", f, a);
}

[[nodiscard]] inline std::string zero_span_csv(const ZeroSpanTrace& trace) {
  return xy_csv("time_s,power_db_re_snl", trace.time_s, trace.power_db);
}

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/**
 * Minimal line plot: frame, min/max tick labels, one polyline per series
 * and a legend. Deterministic output for identical input.
 */
[[nodiscard]] inline std::string svg_plot(std::string_view title, std::string_view x_label, std::string_view y_label,
                                          const std::vector<PlotSeries>& series) {
  constexpr double kWidth = 720, kHeight = 480, kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
  static constexpr std::array<const char*, 6> kColors{"#d62728", "#1f77b4", "#2ca02c", "#000000", "#9467bd", "#ff7f0e"};
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" font-family=\"sans-serif\" "
                "font-size=\"12\">\n",
                kWidth, kHeight);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                kLeft, kTop, pw, ph);
  out += buf;
  auto text = [&](double x, double y, std::string_view anchor, std::string_view s) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"%.*s\">", x, y,
                  static_cast<int>(anchor.size()), anchor.data());
    out += buf;
    out += s;
    out += "</text>\n";
  };
  text(kLeft + pw / 2, 24, "middle", title);
  text(kLeft + pw / 2, kHeight - 16, "middle", x_label);
  std::snprintf(buf, sizeof buf, "<text transform=\"translate(20,%.1f) rotate(-90)\" text-anchor=\"middle\">",
                kTop + ph / 2);
  out += buf;
  out += y_label;
  out += "</text>\n";
  text(kLeft, kTop + ph + 18, "middle", format_value(x0));
  text(kLeft + pw, kTop + ph + 18, "middle", format_value(x1));
  text(kLeft - 6, kTop + ph + 4, "end", format_value(y0));
  text(kLeft - 6, kTop + 4, "end", format_value(y1));
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % kColors.size()];
    out += "<polyline fill=\"none\" stroke=\"";
    out += color;
    out += "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
      out += buf;
    }
    out += "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(si);
    std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%.1f\" x2=\"%g\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                  kLeft + pw + 10, ly - 4, kLeft + pw + 30, ly - 4, color);
    out += buf;
    text(kLeft + pw + 36, ly, "start", s.name);
  }
  out += "</svg>\n";
  return out;
}

/// Lower-case hex SHA-256.
[[nodiscard]] inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

/// Write via a temporary sibling and rename, so readers never see partial files.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw io_error("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open '" + tmp.string() + "' for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw io_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) throw io_error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

}  // namespace qmagsim
