#pragma once

#include <string>
#include <vector>

#include "satin/box.hpp"
#include "satin/tracker.hpp"

namespace satin {

// OTB-style one-pass-evaluation metrics over per-frame (prediction, gt)
// pairs. Success: fraction of frames with IoU at or above each of 101
// thresholds spaced over [0,1]; AUC is their mean (so identical boxes score
// exactly 1). Precision: fraction of
// frames with center error at most each of 51 thresholds 0..50 pixels;
// DP is the precision at 20 pixels.
struct Curves {
  std::vector<double> success;    // 101 points, thresholds i/100
  std::vector<double> precision;  // 51 points, thresholds 0..50
  double auc = 0;
  double dp20 = 0;
  double os50 = 0;  // success at IoU 0.5
};
Curves compute_curves(const std::vector<Box>& pred, const std::vector<Box>& gt);

// A sequence on disk: frames under <dir>/img/ named 0001.jpg (or .png)
// onward, ground truth in <dir>/groundtruth_rect.txt as one "x,y,w,h" line
// per frame (comma- or tab-separated, 1-based pixel origin). Boxes are
// converted to this codebase's 0-based convention on load.
struct Sequence {
  std::string name;
  std::vector<std::string> frame_paths;
  std::vector<Box> gt;
};
Sequence load_sequence(const std::string& dir);

std::vector<Box> load_boxes(const std::string& path);          // 1-based file -> 0-based
void save_boxes(const std::string& path, const std::vector<Box>& boxes);  // 0-based -> 1-based

struct SequenceResult {
  std::string name;
  std::vector<Box> pred;
  Curves curves;
};

struct OpeResult {
  std::vector<SequenceResult> sequences;
  Curves mean;  // per-threshold mean over sequences
};

// Runs the tracker once per sequence (initialized on the first frame's
// ground truth, never re-initialized) and aggregates by averaging the
// per-sequence curves. Sequences that fail to load are skipped with a
// warning on stderr.
OpeResult run_ope(const Model& model, const TrackerConfig& tcfg,
                  const std::vector<std::string>& sequence_dirs);

// Same aggregation over precomputed result files (one per sequence).
Curves mean_curves(const std::vector<Curves>& per_sequence);

}  // namespace satin
