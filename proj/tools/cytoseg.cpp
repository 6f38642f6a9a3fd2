#include <iostream>

#include "CLI11.hpp"
#include "cytoseg/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Overlapping cervical cell segmentation"};
  app.require_subcommand(1);

  cytoseg::SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "Segment an image or a focal stack");
  auto* input = segment->add_option("--input", seg.input, "Grayscale PNG or PGM image");
  auto* stack = segment->add_option("--stack", seg.stack, "Directory of focal planes");
  input->excludes(stack);
  segment->add_option("--config", seg.config, "key = value config file");
  segment->add_option("--out", seg.out, "Output mask directory")->required();
  segment->add_flag("--overlay", seg.overlay, "Also write overlay.png");

  cytoseg::EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score predicted cells against ground truth");
  evaluate->add_option("--pred", ev.pred, "Predicted mask directory")->required();
  evaluate->add_option("--gt", ev.gt, "Ground-truth mask directory")->required();
  evaluate->add_option("--report", ev.report, "Report file")->required();

  cytoseg::PhantomArgs ph;
  auto* phantom = app.add_subcommand("phantom", "Write a synthetic specimen with ground truth");
  phantom->add_option("--seed", ph.seed, "PRNG seed");
  phantom->add_option("--cells", ph.cells, "Number of cells");
  phantom->add_option("--overlap", ph.overlap, "Overlap level in [0, 1]");
  phantom->add_option("--out", ph.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cytoseg::kExitInput;
  }
  if (*segment) return cytoseg::cmd_segment(seg, std::cout, std::cerr);
  if (*evaluate) return cytoseg::cmd_evaluate(ev, std::cout, std::cerr);
  return cytoseg::cmd_phantom(ph, std::cout, std::cerr);
}
