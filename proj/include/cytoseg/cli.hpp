#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cytoseg/config.hpp"
#include "cytoseg/image_io.hpp"
#include "cytoseg/mask_directory.hpp"
#include "cytoseg/metrics.hpp"
#include "cytoseg/morphology.hpp"
#include "cytoseg/phantom.hpp"
#include "cytoseg/pipeline.hpp"

// Command implementations behind the `cytoseg` executable. Each returns the
// process exit status and reports failures as one line on `err`.

namespace cytoseg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitConfig = 3;

struct SegmentArgs {
  std::optional<std::string> input;
  std::optional<std::string> stack;
  std::optional<std::string> config;
  std::string out;
  bool overlay = false;
};

struct EvaluateArgs {
  std::string pred;
  std::string gt;
  std::string report;
};

struct PhantomArgs {
  std::uint64_t seed = 42;
  int cells = 3;
  double overlap = 0.3;
  std::string out;
};

/// Config text, followed by comment lines describing the run. Only
/// deterministic facts go here, so reruns produce identical files.
inline std::string format_provenance(const SegmentationResult& r) {
  std::string s = format_config(r.provenance.config);
  s += "# degenerate_scene = " + std::to_string(r.provenance.degenerate_scene ? 1 : 0) + "\n";
  s += "# clumps = " + std::to_string(r.clumps.n_labels()) + "\n";
  s += "# cells = " + std::to_string(r.cells.size()) + "\n";
  for (std::size_t i = 0; i < r.provenance.cells.size(); ++i) {
    const auto& c = r.provenance.cells[i];
    char buf[160];
    std::snprintf(buf, sizeof buf, "# cell %zu: clump=%d single_nucleus=%d iterations=%d converged=%d centroid=%.2f,%.2f\n",
                  i + 1, c.clump, c.single_nucleus ? 1 : 0, c.iterations, c.converged ? 1 : 0,
                  r.nucleus_centroids[i].x, r.nucleus_centroids[i].y);
    s += buf;
  }
  return s;
}

/// Input image with cell boundaries at l_max and nucleus boundaries at 0.
inline GrayImage render_overlay(const GrayImage& image, const SegmentationResult& r) {
  GrayImage out = image;
  for (const auto& cell : r.cells) {
    const auto b = boundary(cell);
    for (std::size_t i = 0; i < b.size(); ++i)
      if (b[i]) out[i] = static_cast<std::uint16_t>(out.l_max());
  }
  for (int k = 1; k <= r.nuclei.n_labels(); ++k) {
    const auto b = boundary(r.nuclei.mask_of(k));
    for (std::size_t i = 0; i < b.size(); ++i)
      if (b[i]) out[i] = 0;
  }
  return out;
}

/// Planes of a focal stack: every .png / .pgm file in `dir`, by file name.
inline std::vector<GrayImage> load_stack(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  detail::require(fs::is_directory(dir), ErrorCode::unreadable_file, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".png" || ext == ".pgm" || ext == ".PNG" || ext == ".PGM")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  detail::require(!files.empty(), ErrorCode::unreadable_file, "no .png or .pgm planes in " + dir.string());
  std::vector<GrayImage> planes;
  for (const auto& f : files) planes.push_back(load_grayscale(f.string()));
  return planes;
}

inline int cmd_segment(const SegmentArgs& args, std::ostream& out, std::ostream& err) {
  if (args.input.has_value() == args.stack.has_value()) {
    err << "error: give exactly one of --input or --stack\n";
    return kExitInput;
  }
  PipelineConfig cfg;
  try {
    if (args.config) cfg = load_config(*args.config);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::config_error ? kExitConfig : kExitInput;
  }
  try {
    GrayImage source;
    SegmentationResult r;
    if (args.input) {
      source = load_grayscale(*args.input);
      r = run_pipeline(source, cfg);
    } else {
      const auto planes = load_stack(*args.stack);
      r = run_pipeline(planes, cfg);
      if (args.overlay) source = edf_fuse(planes, cfg.edf_window);
    }
    const MaskDirectory md{r.clumps, r.nuclei, r.cells, format_provenance(r)};
    write_directory_atomically(args.out, [&](const std::filesystem::path& tmp) {
      write_mask_directory_into(tmp, md);
      if (args.overlay) save_image(render_overlay(source, r), (tmp / "overlay.png").string());
    });
    out << "cells " << r.cells.size() << "\n";
    for (const auto& t : r.provenance.timings) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "time %s %.1f ms\n", t.stage.c_str(), t.milliseconds);
      out << buf;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::config_error || e.code() == ErrorCode::stability_violation ? kExitConfig
                                                                                               : kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

inline std::string format_report(const EvalReport& r) {
  auto line = [](const char* key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%.4f\n", key, v);
    return std::string(buf);
  };
  std::string s = line("dc_mean", r.dc_mean) + line("dc_std", r.dc_std) + line("tpr", r.tpr) +
                  line("tpr_prose", r.tpr_prose) + line("fpr", r.fpr) + line("fno", r.fno);
  s += "gt_index,pred_index,dc\n";
  for (const auto& m : r.per_cell_dc) {
    char buf[96];
    if (m.pred_index) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.4f\n", m.gt_index + 1, *m.pred_index + 1, m.dc);
    } else {
      std::snprintf(buf, sizeof buf, "%zu,none,%.4f\n", m.gt_index + 1, m.dc);
    }
    s += buf;
  }
  return s;
}

inline int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const auto gt = read_cells(args.gt);
    detail::require(!gt.empty(), ErrorCode::layout_error, "ground truth has no cells in " + args.gt);
    const auto pred = read_cells(args.pred);
    for (const auto& p : pred) {
      detail::require(p.same_shape(gt.front()), ErrorCode::layout_error,
                      "predicted cells differ in size from ground truth");
    }
    const auto report = evaluate(pred, gt);
    write_text_file(args.report, format_report(report));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f\n", report.dc_mean);
    out << buf;
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

/// Ground-truth MaskDirectory for a phantom: clumps are the 8-connected
/// components of the cell union, nucleus i + 1 belongs to cell i.
inline MaskDirectory phantom_mask_directory(const Phantom& p, const PhantomSpec& spec) {
  MaskDirectory md;
  BinaryMask all(p.image.width(), p.image.height());
  for (const auto& c : p.cells)
    for (std::size_t i = 0; i < c.size(); ++i) all[i] |= c[i];
  md.clumps = connected_components(all, Connectivity::eight);
  md.nuclei = LabelMap(p.image.width(), p.image.height());
  for (std::size_t k = 0; k < p.nuclei.size(); ++k)
    for (std::size_t i = 0; i < p.nuclei[k].size(); ++i)
      if (p.nuclei[k][i]) md.nuclei[i] = static_cast<std::int32_t>(k + 1);
  md.nuclei.set_n_labels(static_cast<int>(p.nuclei.size()));
  md.cells = p.cells;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "# phantom seed=%llu cells=%d overlap=%s size=%dx%d levels=%d/%d/%d noise_sigma=%s\n",
                static_cast<unsigned long long>(spec.seed), spec.n_cells, detail::format_number(spec.overlap_level).c_str(),
                spec.width, spec.height, spec.background_level, spec.cytoplasm_level, spec.nucleus_level,
                detail::format_number(spec.noise_sigma).c_str());
  md.provenance = buf;
  return md;
}

inline int cmd_phantom(const PhantomArgs& args, std::ostream& out, std::ostream& err) {
  PhantomSpec spec;
  spec.seed = args.seed;
  spec.n_cells = args.cells;
  spec.overlap_level = args.overlap;
  Phantom p;
  try {
    p = generate_phantom(spec);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const auto md = phantom_mask_directory(p, spec);
    write_directory_atomically(args.out, [&](const std::filesystem::path& tmp) {
      save_image(p.image, (tmp / "image.png").string());
      write_mask_directory_into(tmp, md);
    });
    out << "cells " << p.cells.size() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace cytoseg
