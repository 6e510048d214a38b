// satin: train, run and evaluate the keypoint tracker.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "satin/config.hpp"
#include "satin/eval.hpp"
#include "satin/image_io.hpp"
#include "satin/serialize.hpp"
#include "satin/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace satin;

namespace {

struct ConfigFlags {
  std::string preset = "desk";
  std::string config_file;
  std::vector<std::string> sets;
  uint64_t seed = 1;
  bool seed_given = false;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& cf) {
  cmd->add_option("--preset", cf.preset, "configuration preset: paper or desk")
      ->check(CLI::IsMember({"paper", "desk"}));
  cmd->add_option("--config", cf.config_file, "key-value config file");
  cmd->add_option("--set", cf.sets, "override one key, e.g. --set train.steps=100");
  cmd->add_option("--seed", cf.seed, "master random seed")->each([&](const std::string&) {
    cf.seed_given = true;
  });
}

RunConfig build_config(const ConfigFlags& cf) {
  RunConfig cfg = make_config(cf.preset);
  if (!cf.config_file.empty()) load_config_file(cfg, cf.config_file);
  apply_env_overrides(cfg);
  for (const std::string& s : cf.sets) {
    size_t eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got: " + s);
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (cf.seed_given) cfg.seed = cf.seed;
  cfg.finalize();
  return cfg;
}

json curves_json(const Curves& c) {
  return json{{"auc", c.auc},           {"dp20", c.dp20},
              {"os50", c.os50},         {"success", c.success},
              {"precision", c.precision}};
}

Curves curves_from_json(const json& j) {
  Curves c;
  c.success = j.at("success").get<std::vector<double>>();
  c.precision = j.at("precision").get<std::vector<double>>();
  c.auc = j.at("auc").get<double>();
  c.dp20 = j.at("dp20").get<double>();
  c.os50 = j.at("os50").get<double>();
  return c;
}

std::vector<std::string> sequence_dirs(const std::string& dataset) {
  std::vector<std::string> dirs;
  for (const auto& e : fs::directory_iterator(dataset))
    if (e.is_directory()) dirs.push_back(e.path().string());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw ConfigError("no sequence directories under " + dataset);
  return dirs;
}

int cmd_train(const ConfigFlags& cf, const std::string& out_dir) {
  RunConfig cfg = build_config(cf);
  Model model(cfg.model);
  TrainConfig tc = cfg.train;
  tc.out_dir = out_dir;
  std::printf("training: %lld steps, batch %lld, %lld params\n", (long long)tc.steps,
              (long long)tc.batch_size, (long long)model.param_total());
  TrainResult res = train(model, tc, [](const StepStats& s) {
    if (s.step % 50 == 0)
      std::printf("step %lld lr %.3g loss %.4f\n", (long long)s.step, s.lr, s.total);
  });
  std::printf("done: %lld steps, final loss %.4f%s\n", (long long)res.steps_done, res.final_loss,
              res.diverged ? " (DIVERGED)" : "");
  return res.diverged ? 1 : 0;
}

int cmd_track(const ConfigFlags& cf, const std::string& weights, const std::string& seq_dir,
              const std::string& out_file) {
  RunConfig cfg = build_config(cf);
  Sequence seq;
  try {
    seq = load_sequence(seq_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: cannot initialize from %s: %s\n", seq_dir.c_str(), e.what());
    return 2;
  }
  Model model(cfg.model);
  load_params(weights, model.params);
  Tracker tracker(model, cfg.tracker);
  std::vector<Box> pred;
  for (size_t i = 0; i < seq.frame_paths.size(); ++i) {
    Tensor frame = load_image(seq.frame_paths[i]);
    if (i == 0) {
      tracker.init(frame, seq.gt[0]);
      pred.push_back(seq.gt[0]);
    } else {
      pred.push_back(tracker.update(frame));
    }
  }
  save_boxes(out_file, pred);
  std::printf("tracked %zu frames -> %s\n", pred.size(), out_file.c_str());
  return 0;
}

int cmd_eval(const std::string& dataset, const std::string& results_dir,
             const std::string& report_path) {
  std::vector<Curves> curves;
  json seqs = json::array();
  for (const std::string& dir : sequence_dirs(dataset)) {
    std::string name = fs::path(dir).filename().string();
    std::string results = (fs::path(results_dir) / (name + ".txt")).string();
    std::vector<Box> gt, pred;
    try {
      gt = load_boxes((fs::path(dir) / "groundtruth_rect.txt").string());
      pred = load_boxes(results);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "eval: skipping %s: %s\n", name.c_str(), e.what());
      continue;
    }
    if (pred.size() != gt.size()) {
      std::fprintf(stderr, "eval: skipping %s: %zu results vs %zu gt frames\n", name.c_str(),
                   pred.size(), gt.size());
      continue;
    }
    Curves c = compute_curves(pred, gt);
    json js = curves_json(c);
    js["name"] = name;
    seqs.push_back(js);
    curves.push_back(c);
  }
  if (curves.empty()) {
    std::fprintf(stderr, "error: no evaluable sequences\n");
    return 1;
  }
  Curves mean = mean_curves(curves);
  json report{{"sequences", seqs}, {"mean", curves_json(mean)}};
  std::ofstream out(report_path);
  out << report.dump(2) << "\n";
  std::printf("AUC %.4f  DP@20 %.4f  OS@0.5 %.4f  (%zu sequences) -> %s\n", mean.auc, mean.dp20,
              mean.os50, curves.size(), report_path.c_str());
  return 0;
}

void write_curve_csv(const std::string& path, const std::string& xname,
                     const std::vector<double>& xs, const std::vector<double>& ys) {
  std::ofstream out(path);
  out << xname << ",fraction\n";
  char line[80];
  for (size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", xs[i], ys[i]);
    out << line;
  }
}

void write_curve_svg(const std::string& path, const std::string& title,
                     const std::vector<double>& xs, const std::vector<double>& ys) {
  double x_max = xs.back();
  const int W = 480, H = 360, ml = 50, mb = 40, mt = 30, mr = 20;
  auto px = [&](double x) { return ml + x / x_max * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - y * (H - mt - mb); };
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    double fy = i / 5.0, fx = i / 5.0 * x_max;
    out << "<line x1=\"" << ml << "\" y1=\"" << py(fy) << "\" x2=\"" << W - mr << "\" y2=\""
        << py(fy) << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << ml - 6 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\" font-size=\"10\">" << fy << "</text>\n"
        << "<text x=\"" << px(fx) << "\" y=\"" << H - mb + 14
        << "\" text-anchor=\"middle\" font-size=\"10\">" << fx << "</text>\n";
  }
  out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (size_t i = 0; i < xs.size(); ++i) out << px(xs[i]) << "," << py(ys[i]) << " ";
  out << "\"/>\n<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr
      << "\" height=\"" << H - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n</svg>\n";
}

int cmd_plot(const std::string& report_path, const std::string& out_dir) {
  std::ifstream in(report_path);
  if (!in.good()) throw ConfigError("cannot open report: " + report_path);
  json report = json::parse(in);
  Curves mean = curves_from_json(report.at("mean"));
  fs::create_directories(out_dir);

  std::vector<double> st(101), pt(51);
  for (int i = 0; i <= 100; ++i) st[size_t(i)] = i / 100.0;
  for (int i = 0; i <= 50; ++i) pt[size_t(i)] = double(i);
  write_curve_csv(out_dir + "/success.csv", "overlap_threshold", st, mean.success);
  write_curve_csv(out_dir + "/precision.csv", "error_threshold_px", pt, mean.precision);
  char t1[64], t2[64];
  std::snprintf(t1, sizeof t1, "Success plot (AUC %.3f)", mean.auc);
  std::snprintf(t2, sizeof t2, "Precision plot (DP@20 %.3f)", mean.dp20);
  write_curve_svg(out_dir + "/success.svg", t1, st, mean.success);
  write_curve_svg(out_dir + "/precision.svg", t2, pt, mean.precision);
  std::printf("wrote success/precision CSV and SVG under %s\n", out_dir.c_str());
  return 0;
}

int cmd_params(const ConfigFlags& cf) {
  RunConfig cfg = build_config(cf);
  Model model(cfg.model);
  ModelReport r = model_report(model);
  std::printf("%-12s %14s %14s\n", "module", "params", "GFLOPs");
  for (const auto& row : r.rows)
    std::printf("%-12s %14lld %14.3f\n", row.name.c_str(), (long long)row.params,
                2e-9 * double(row.macs));
  std::printf("%-12s %14lld %14.3f\n", "total", (long long)r.total_params,
              2e-9 * double(r.total_macs));
  std::printf("total params: %.2fM\n", double(r.total_params) / 1e6);
  return 0;
}

int cmd_synth(const std::string& out_dir, int64_t count, int64_t frames, uint64_t seed,
              uint64_t first_index) {
  SynthConfig sc;
  sc.frames = frames;
  sc.seed = seed;
  for (int64_t i = 0; i < count; ++i) {
    SynthVideo v = SynthVideo::sample(sc, first_index + uint64_t(i));
    char name[32];
    std::snprintf(name, sizeof name, "seq_%04lld", (long long)(first_index + uint64_t(i)));
    fs::path dir = fs::path(out_dir) / name;
    fs::create_directories(dir / "img");
    std::vector<Box> gt;
    for (int64_t t = 0; t < frames; ++t) {
      char fname[32];
      std::snprintf(fname, sizeof fname, "%04lld.png", (long long)(t + 1));
      save_png((dir / "img" / fname).string(), v.render(t));
      gt.push_back(v.gt(t));
    }
    save_boxes((dir / "groundtruth_rect.txt").string(), gt);
  }
  std::printf("wrote %lld sequences under %s\n", (long long)count, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SATIN keypoint tracker"};
  app.require_subcommand(1);

  ConfigFlags train_cf, track_cf, params_cf;
  std::string train_out = "run";
  auto* train_cmd = app.add_subcommand("train", "train a model on synthetic sequences");
  add_config_flags(train_cmd, train_cf);
  train_cmd->add_option("--out", train_out, "output directory (checkpoints, report.csv)");

  std::string weights, seq_dir, track_out = "results.txt";
  auto* track_cmd = app.add_subcommand("track", "run the tracker over one sequence");
  add_config_flags(track_cmd, track_cf);
  track_cmd->add_option("--weights", weights, "checkpoint file")->required();
  track_cmd->add_option("--seq", seq_dir, "sequence directory")->required();
  track_cmd->add_option("--out", track_out, "results file (x,y,w,h per frame)");

  std::string dataset, results_dir, report_path = "report.json";
  auto* eval_cmd = app.add_subcommand("eval", "score result files against a dataset");
  eval_cmd->add_option("--dataset", dataset, "directory of sequence directories")->required();
  eval_cmd->add_option("--results", results_dir, "directory of <sequence>.txt result files")
      ->required();
  eval_cmd->add_option("--report", report_path, "output report (JSON)");

  std::string plot_report, plot_out = "plots";
  auto* plot_cmd = app.add_subcommand("plot", "emit success/precision curves from a report");
  plot_cmd->add_option("--report", plot_report, "report JSON from eval")->required();
  plot_cmd->add_option("--out", plot_out, "output directory");

  auto* params_cmd = app.add_subcommand("params", "report parameter and GFLOP counts");
  add_config_flags(params_cmd, params_cf);

  std::string synth_out;
  int64_t synth_count = 20, synth_frames = 60, synth_first = 0;
  uint64_t synth_seed = 1;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic benchmark dataset");
  synth_cmd->add_option("--out", synth_out, "dataset directory")->required();
  synth_cmd->add_option("--count", synth_count, "number of sequences");
  synth_cmd->add_option("--frames", synth_frames, "frames per sequence");
  synth_cmd->add_option("--seed", synth_seed, "dataset seed");
  synth_cmd->add_option("--first-index", synth_first, "index of the first sequence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_cf, train_out);
    if (track_cmd->parsed()) return cmd_track(track_cf, weights, seq_dir, track_out);
    if (eval_cmd->parsed()) return cmd_eval(dataset, results_dir, report_path);
    if (plot_cmd->parsed()) return cmd_plot(plot_report, plot_out);
    if (params_cmd->parsed()) return cmd_params(params_cf);
    if (synth_cmd->parsed())
      return cmd_synth(synth_out, synth_count, synth_frames, synth_seed, uint64_t(synth_first));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
