#include "satin/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "satin/image_io.hpp"

namespace fs = std::filesystem;

namespace satin {

Curves compute_curves(const std::vector<Box>& pred, const std::vector<Box>& gt) {
  check(pred.size() == gt.size() && !gt.empty(), "compute_curves: length mismatch");
  size_t n = gt.size();
  std::vector<double> ious(n), errs(n);
  for (size_t i = 0; i < n; ++i) {
    ious[i] = iou(pred[i], gt[i]);
    double dx = pred[i].cx() - gt[i].cx(), dy = pred[i].cy() - gt[i].cy();
    errs[i] = std::hypot(dx, dy);
  }

  Curves c;
  c.success.resize(101);
  for (int i = 0; i <= 100; ++i) {
    double t = i / 100.0;
    int64_t hits = 0;
    for (double v : ious) hits += v >= t;
    c.success[size_t(i)] = double(hits) / double(n);
  }
  c.precision.resize(51);
  for (int i = 0; i <= 50; ++i) {
    int64_t hits = 0;
    for (double v : errs) hits += v <= double(i);
    c.precision[size_t(i)] = double(hits) / double(n);
  }
  for (double v : c.success) c.auc += v;
  c.auc /= 101.0;
  c.dp20 = c.precision[20];
  c.os50 = c.success[50];
  return c;
}

static std::vector<double> parse_fields(const std::string& line) {
  std::string s = line;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::replace(s.begin(), s.end(), '\t', ' ');
  std::istringstream is(s);
  std::vector<double> out;
  double v;
  while (is >> v) out.push_back(v);
  return out;
}

std::vector<Box> load_boxes(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "cannot open box file: " + path);
  std::vector<Box> boxes;
  std::string line;
  while (std::getline(in, line)) {
    auto f = parse_fields(line);
    if (f.empty()) continue;
    check(f.size() == 4, "bad box line in " + path + ": " + line);
    boxes.push_back(Box::from_xywh(f[0] - 1, f[1] - 1, f[2], f[3]));
  }
  check(!boxes.empty(), "empty box file: " + path);
  return boxes;
}

void save_boxes(const std::string& path, const std::vector<Box>& boxes) {
  std::ofstream out(path);
  check(out.good(), "cannot write box file: " + path);
  for (const Box& b : boxes) {
    char line[128];
    std::snprintf(line, sizeof line, "%.4f,%.4f,%.4f,%.4f\n", b.x0 + 1, b.y0 + 1, b.w(), b.h());
    out << line;
  }
}

Sequence load_sequence(const std::string& dir) {
  Sequence seq;
  seq.name = fs::path(dir).filename().string();
  seq.gt = load_boxes((fs::path(dir) / "groundtruth_rect.txt").string());

  std::vector<std::string> frames;
  fs::path img = fs::path(dir) / "img";
  check(fs::is_directory(img), "missing img/ directory under " + dir);
  for (const auto& e : fs::directory_iterator(img)) {
    std::string ext = e.path().extension().string();
    if (ext == ".jpg" || ext == ".jpeg" || ext == ".png") frames.push_back(e.path().string());
  }
  std::sort(frames.begin(), frames.end());
  check(!frames.empty(), "no frames under " + img.string());
  check(frames.size() >= seq.gt.size(), "fewer frames than ground-truth lines in " + dir);
  frames.resize(seq.gt.size());
  seq.frame_paths = std::move(frames);
  return seq;
}

Curves mean_curves(const std::vector<Curves>& per_sequence) {
  check(!per_sequence.empty(), "mean_curves: no sequences");
  Curves m;
  m.success.assign(101, 0.0);
  m.precision.assign(51, 0.0);
  for (const Curves& c : per_sequence) {
    for (size_t i = 0; i < m.success.size(); ++i) m.success[i] += c.success[i];
    for (size_t i = 0; i < m.precision.size(); ++i) m.precision[i] += c.precision[i];
  }
  double n = double(per_sequence.size());
  for (double& v : m.success) v /= n;
  for (double& v : m.precision) v /= n;
  for (double v : m.success) m.auc += v;
  m.auc /= 101.0;
  m.dp20 = m.precision[20];
  m.os50 = m.success[50];
  return m;
}

OpeResult run_ope(const Model& model, const TrackerConfig& tcfg,
                  const std::vector<std::string>& sequence_dirs) {
  OpeResult res;
  std::vector<Curves> curves;
  for (const std::string& dir : sequence_dirs) {
    Sequence seq;
    try {
      seq = load_sequence(dir);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "eval: skipping %s: %s\n", dir.c_str(), e.what());
      continue;
    }
    SequenceResult sr;
    sr.name = seq.name;
    try {
      Tracker tracker(model, tcfg);
      for (size_t i = 0; i < seq.frame_paths.size(); ++i) {
        Tensor frame = load_image(seq.frame_paths[i]);
        if (i == 0) {
          tracker.init(frame, seq.gt[0]);
          sr.pred.push_back(seq.gt[0]);
        } else {
          sr.pred.push_back(tracker.update(frame));
        }
      }
    } catch (const std::exception& e) {
      std::fprintf(stderr, "eval: skipping %s: %s\n", dir.c_str(), e.what());
      continue;
    }
    sr.curves = compute_curves(sr.pred, seq.gt);
    curves.push_back(sr.curves);
    res.sequences.push_back(std::move(sr));
  }
  check(!curves.empty(), "eval: no usable sequences");
  res.mean = mean_curves(curves);
  return res;
}

}  // namespace satin
