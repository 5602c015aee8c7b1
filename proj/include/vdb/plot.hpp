// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace vdb::cli {

struct Series {
  std::string name;
  std::vector<double> y;
};

/// Line chart with one panel per series sharing the x axis (log2 spaced when
/// every x is a positive power of two). `note` is printed under the title.
std::string svg_line_plot(const std::string& title, const std::string& note,
                          const std::string& x_label,
                          const std::vector<double>& x,
                          const std::vector<Series>& series);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace vdb::cli
