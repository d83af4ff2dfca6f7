#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nilcone/coupling.hpp"
#include "nilcone/derivative.hpp"
#include "nilcone/word_metric.hpp"

namespace nilcone::report {

/// Locale-independent, round-trip-stable number formatting for artifacts.
inline std::string num(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& r)
{
  os << "n,samples,fraction_within_eps,median_proxy_dist,seed\n";
  for (const auto& row : r.rows)
    os << row.n << ',' << row.samples << ',' << num(row.fraction_within_eps) << ',' << num(row.median_proxy_dist)
       << ',' << row.seed << '\n';
}

inline void write_integrability_csv(std::ostream& os, const std::vector<IntegrabilityReport>& rows)
{
  os << "generator,mean_norm,ci_low,ci_high,samples,seed\n";
  for (const auto& r : rows)
    os << r.generator << ',' << num(r.mean_norm) << ',' << num(r.ci_low) << ',' << num(r.ci_high) << ','
       << r.samples << ',' << r.seed << '\n';
}

inline void write_ball_csv(std::ostream& os, const std::vector<BallProfileRow>& rows)
{
  const std::size_t m = rows.empty() ? 0 : rows.front().max_coord.size();
  os << "n,ball_size";
  for (std::size_t i = 1; i <= m; ++i)
    os << ",max_coord_" << i;
  os << '\n';
  for (const auto& r : rows) {
    os << r.n << ',' << r.ball_size;
    for (double v : r.max_coord)
      os << ',' << num(v);
    os << '\n';
  }
}

inline void write_iterate_csv(std::ostream& os, const IterateReport& r, std::uint64_t seed)
{
  os << "n,samples,median_ab_deviation,median_com_ratio,median_proxy_dist,seed\n";
  for (const auto& row : r.rows)
    os << row.n << ',' << row.samples << ',' << num(row.median_ab_deviation) << ',' << num(row.median_com_ratio)
       << ',' << num(row.median_proxy) << ',' << seed << '\n';
}

inline void write_arbitrary_csv(std::ostream& os, const ArbitraryReport& r, std::uint64_t seed)
{
  os << "n,scale,samples,median_proxy_dist,seed\n";
  for (const auto& row : r.rows)
    os << row.n << ',' << row.scale << ',' << row.samples << ',' << num(row.median) << ',' << seed << '\n';
}

inline void write_image_csv(std::ostream& os, const GeneratorImageTable& t)
{
  const std::size_t d = t.images.empty() ? 0 : t.images.front().mean.size();
  os << "generator,digits";
  for (std::size_t k = 1; k <= d; ++k)
    os << ",mean_" << k << ",ci_" << k;
  os << ",samples,depth,seed\n";
  for (std::size_t s = 0; s < t.generators.size(); ++s) {
    os << s << ',';
    for (std::size_t k = 0; k < t.generators[s].size(); ++k)
      os << (k ? " " : "") << t.generators[s][k];
    for (std::size_t k = 0; k < d; ++k)
      os << ',' << num(t.images[s].mean[k]) << ',' << num(t.images[s].half_width[k]);
    os << ',' << t.samples << ',' << t.depth << ',' << t.seed << '\n';
  }
}

/// Fraction-vs-n line plot with a log2 n axis, as standalone SVG.
inline std::string convergence_svg(const ConvergenceReport& r, const std::string& title)
{
  const double W = 480, H = 320, L = 56, R = 16, T = 32, B = 44;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
     << title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  if (r.rows.empty()) {
    os << "</svg>\n";
    return os.str();
  }
  const double lo = std::log2(static_cast<double>(r.rows.front().n));
  const double hi = std::max(lo + 1.0, std::log2(static_cast<double>(r.rows.back().n)));
  auto px = [&](std::int64_t n) { return L + (std::log2(static_cast<double>(n)) - lo) / (hi - lo) * (W - L - R); };
  auto py = [&](double f) { return H - B - f * (H - B - T); };
  for (double f : {0.0, 0.5, 0.9, 1.0})
    os << "<text x=\"" << L - 6 << "\" y=\"" << num(py(f) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(f) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << num(py(r.threshold)) << "\" x2=\"" << W - R << "\" y2=\""
     << num(py(r.threshold)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < r.rows.size(); ++i)
    os << (i ? " " : "") << num(px(r.rows[i].n)) << ',' << num(py(r.rows[i].fraction_within_eps));
  os << "\"/>\n";
  for (const auto& row : r.rows) {
    os << "<circle cx=\"" << num(px(row.n)) << "\" cy=\"" << num(py(row.fraction_within_eps))
       << "\" r=\"3\" fill=\"steelblue\"/>\n";
    os << "<text x=\"" << num(px(row.n)) << "\" y=\"" << H - B + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << row.n << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 8
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">n</text>\n";
  os << "</svg>\n";
  return os.str();
}

} // namespace nilcone::report
