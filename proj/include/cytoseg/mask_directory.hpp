#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "cytoseg/error.hpp"
#include "cytoseg/image_io.hpp"
#include "cytoseg/raster.hpp"

// On-disk segmentation layout:
//   clumps.png          16-bit label map
//   nuclei.png          16-bit label map
//   cells/cell_0001.png one 8-bit mask per cell, numbered from 1
//   provenance.txt

namespace cytoseg {

struct MaskDirectory {
  LabelMap clumps;
  LabelMap nuclei;
  std::vector<BinaryMask> cells;
  std::string provenance;
};

inline std::string cell_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cell_%04zu.png", index + 1);
  return buf;
}

/// Builds `dir` by calling `fill` on a fresh sibling directory, then swaps it
/// into place. A failure leaves any previous `dir` untouched.
inline void write_directory_atomically(const std::filesystem::path& dir,
                                       const std::function<void(const std::filesystem::path&)>& fill) {
  namespace fs = std::filesystem;
  const auto parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(parent, ec);
  detail::require(!ec, ErrorCode::io_failure, "cannot create " + parent.string());
  const auto tmp = parent / ("." + dir.filename().string() + ".partial");
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp, ec);
  detail::require(!ec, ErrorCode::io_failure, "cannot create " + tmp.string());
  try {
    fill(tmp);
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
  fs::remove_all(dir, ec);
  detail::require(!ec, ErrorCode::io_failure, "cannot replace " + dir.string());
  fs::rename(tmp, dir, ec);
  detail::require(!ec, ErrorCode::io_failure, "cannot move output into " + dir.string());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  detail::require(static_cast<bool>(out), ErrorCode::io_failure, "cannot write " + path.string());
}

/// Writes the layout into an existing directory.
inline void write_mask_directory_into(const std::filesystem::path& dir, const MaskDirectory& md) {
  for (const auto& c : md.cells) require_same_shape(md.clumps, c, "cell masks must match the clump map");
  require_same_shape(md.clumps, md.nuclei, "nucleus map must match the clump map");
  save_mask(md.clumps, (dir / "clumps.png").string());
  save_mask(md.nuclei, (dir / "nuclei.png").string());
  std::filesystem::create_directories(dir / "cells");
  for (std::size_t i = 0; i < md.cells.size(); ++i) save_mask(md.cells[i], (dir / "cells" / cell_file_name(i)).string());
  write_text_file(dir / "provenance.txt", md.provenance);
}

inline void write_mask_directory(const std::filesystem::path& dir, const MaskDirectory& md) {
  write_directory_atomically(dir, [&](const std::filesystem::path& tmp) { write_mask_directory_into(tmp, md); });
}

/// Reads `dir/cells`. Files must be exactly cell_0001.png .. cell_NNNN.png
/// with one shared size; anything else is a layout error. An empty cells/
/// directory gives no cells.
inline std::vector<BinaryMask> read_cells(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const auto cells_dir = dir / "cells";
  detail::require(fs::is_directory(cells_dir), ErrorCode::layout_error, "missing directory " + cells_dir.string());
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(cells_dir)) names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  std::vector<BinaryMask> cells;
  for (std::size_t i = 0; i < names.size(); ++i) {
    detail::require(names[i] == cell_file_name(i), ErrorCode::layout_error,
                    "unexpected file " + (cells_dir / names[i]).string() + " (expected " + cell_file_name(i) + ")");
    BinaryMask m;
    try {
      m = load_mask((cells_dir / names[i]).string());
    } catch (const Error& e) {
      throw Error(ErrorCode::layout_error, e.what());
    }
    if (!cells.empty()) {
      detail::require(m.same_shape(cells.front()), ErrorCode::layout_error,
                      names[i] + " differs in size from " + cell_file_name(0));
    }
    cells.push_back(std::move(m));
  }
  return cells;
}

}  // namespace cytoseg
