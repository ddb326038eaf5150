// Artifact plumbing: text files, content hashes, deterministic SVG plots.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace wpl {

inline constexpr std::string_view kVersion = "0.1.0";

std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

struct PlotSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f6fb2";
  bool points_only = false;
};

// Fixed 800x600 canvas, no timestamps: identical input renders byte-identical
// output. Throws on empty input.
std::string render_svg_plot(const std::vector<PlotSeries>& series, const std::string& title,
                            const std::string& x_label, const std::string& y_label, bool log_y);

}  // namespace wpl
