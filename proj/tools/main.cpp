#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "colgrade/dae.hpp"
#include "colgrade/dqn.hpp"
#include "colgrade/pipeline.hpp"
#include "colgrade/rng.hpp"

namespace fs = std::filesystem;
using namespace colgrade;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open: " + path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

long long parse_ll(const std::string& raw, const std::string& what) {
  const std::string v = trim(raw);
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError(what + ": bad integer: " + raw);
  }
}

double parse_num(const std::string& raw, const std::string& what) {
  const std::string v = trim(raw);
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError(what + ": bad number: " + raw);
  }
}

std::string f6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string g9(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

// ---- configuration -----------------------------------------------------

struct AppConfig {
  int synth_dims = 128;
  int synth_roi_edge = 64;
  std::array<int, 3> per_class{10, 10, 10};
  EnvConfig env;
  AgentConfig agent;
  int locate_starts = 20;
  DaeConfig dae;
  ClassifierSpec clf;
  int eval_folds = 5;
  int raw_edge = 64;
};

void apply_config(AppConfig& c, const std::string& path) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const auto as_int = [](int& dst) {
    return [&dst](const std::string& v, const std::string& k) {
      dst = static_cast<int>(parse_ll(v, k));
    };
  };
  const auto as_num = [](double& dst) {
    return [&dst](const std::string& v, const std::string& k) {
      dst = parse_num(v, k);
    };
  };
  const auto as_str = [](std::string& dst) {
    return [&dst](const std::string& v, const std::string&) { dst = trim(v); };
  };

  std::map<std::string, Setter> keys;
  keys["synth.dims"] = as_int(c.synth_dims);
  keys["synth.roi_edge"] = as_int(c.synth_roi_edge);
  keys["synth.per_class"] = [&c](const std::string& v, const std::string& k) {
    const auto parts = split(v, ',');
    if (parts.size() != 3) throw ConfigError(k + ": need three counts");
    for (int g = 0; g < 3; ++g)
      c.per_class[g] = static_cast<int>(parse_ll(parts[g], k));
  };
  keys["env.edge"] = as_int(c.env.edge);
  keys["env.tau"] = as_num(c.env.tau);
  keys["env.step"] = as_int(c.env.step);
  keys["env.history_len"] = as_int(c.env.history_len);
  keys["env.max_steps"] = as_int(c.env.max_steps);
  keys["env.osc_window"] = as_int(c.env.osc_window);
  keys["env.osc_count"] = as_int(c.env.osc_count);
  keys["agent.gamma"] = as_num(c.agent.gamma);
  keys["agent.eps_start"] = as_num(c.agent.eps_start);
  keys["agent.eps_end"] = as_num(c.agent.eps_end);
  keys["agent.episodes"] = as_int(c.agent.episodes);
  keys["agent.batch"] = as_int(c.agent.batch);
  keys["agent.replay_capacity"] = as_int(c.agent.replay_capacity);
  keys["agent.train_every"] = as_int(c.agent.train_every);
  keys["agent.target_sync"] = as_int(c.agent.target_sync);
  keys["agent.pool"] = as_int(c.agent.pool);
  keys["agent.lr"] = as_num(c.agent.sgd.lr);
  keys["agent.decay"] = as_num(c.agent.sgd.decay);
  keys["agent.momentum"] = as_num(c.agent.sgd.momentum);
  keys["locate.starts"] = as_int(c.locate_starts);
  keys["dae.sigma"] = as_num(c.dae.sigma);
  keys["dae.epochs"] = as_int(c.dae.epochs);
  keys["dae.batch"] = as_int(c.dae.batch);
  keys["dae.edge"] = as_int(c.dae.edge);
  keys["dae.channels"] = [&c](const std::string& v, const std::string& k) {
    c.dae.channels.clear();
    for (const auto& part : split(v, ','))
      c.dae.channels.push_back(static_cast<int>(parse_ll(part, k)));
  };
  keys["dae.final_activation"] = as_str(c.dae.final_activation);
  keys["dae.lr"] = as_num(c.dae.sgd.lr);
  keys["dae.decay"] = as_num(c.dae.sgd.decay);
  keys["dae.momentum"] = as_num(c.dae.sgd.momentum);
  keys["clf.kind"] = as_str(c.clf.kind);
  keys["cnn.epochs"] = as_int(c.clf.cnn.epochs);
  keys["cnn.batch"] = as_int(c.clf.cnn.batch);
  keys["cnn.lr"] = as_num(c.clf.cnn.sgd.lr);
  keys["cnn.decay"] = as_num(c.clf.cnn.sgd.decay);
  keys["cnn.momentum"] = as_num(c.clf.cnn.sgd.momentum);
  keys["knn.k"] = as_int(c.clf.knn.k);
  keys["rf.trees"] = as_int(c.clf.rf.trees);
  keys["rf.min_leaf"] = as_int(c.clf.rf.min_leaf);
  keys["svm.c"] = as_num(c.clf.svm.c);
  keys["svm.degree"] = as_int(c.clf.svm.degree);
  keys["svm.tol"] = as_num(c.clf.svm.tol);
  keys["svm.max_passes"] = as_int(c.clf.svm.max_passes);
  keys["eval.folds"] = as_int(c.eval_folds);
  keys["raw.edge"] = as_int(c.raw_edge);

  const std::string text = slurp(path);
  for (const auto& raw_line : split(text, '\n')) {
    std::string line = raw_line;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key=value, got: " + raw_line);
    const std::string key = trim(line.substr(0, eq));
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError("config: unknown key: " + key);
    it->second(line.substr(eq + 1), key);
  }
}

// ---- dataset plumbing ----------------------------------------------------

struct Loaded {
  std::vector<Phantom> phantoms;
  std::vector<std::string> ids;
};

Loaded load_dataset(const std::string& dir) {
  const std::string text = slurp((fs::path(dir) / "manifest.csv").string());
  Loaded out;
  bool header = true;
  for (const auto& raw : split(text, '\n')) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      if (line.rfind("id,label", 0) != 0)
        throw DataError("manifest: unexpected header: " + line);
      header = false;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 9)
      throw DataError("manifest: expected 9 columns: " + line);
    Phantom ph;
    ph.label = static_cast<int>(parse_ll(cols[1], "manifest label"));
    for (int a = 0; a < 3; ++a)
      ph.roi.corner[a] = static_cast<int>(parse_ll(cols[2 + a], "manifest corner"));
    ph.roi.edge = static_cast<int>(parse_ll(cols[5], "manifest roi_edge"));
    ph.tmax = load_vvol((fs::path(dir) / cols[6]).string());
    ph.rbf = load_vvol((fs::path(dir) / cols[7]).string());
    ph.rbv = load_vvol((fs::path(dir) / cols[8]).string());
    out.ids.push_back(cols[0]);
    out.phantoms.push_back(std::move(ph));
  }
  if (out.phantoms.empty()) throw DataError("manifest: no rows in " + dir);
  return out;
}

std::vector<CubeState> load_rois(const std::string& path,
                                 const std::vector<std::string>& ids) {
  const std::string text = slurp(path);
  std::map<std::string, CubeState> by_id;
  bool header = true;
  for (const auto& raw : split(text, '\n')) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      if (line.rfind("id,", 0) != 0)
        throw DataError("rois: unexpected header: " + line);
      header = false;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() < 5) throw DataError("rois: expected 5+ columns: " + line);
    CubeState s;
    for (int a = 0; a < 3; ++a)
      s.corner[a] = static_cast<int>(parse_ll(cols[1 + a], "rois corner"));
    s.edge = static_cast<int>(parse_ll(cols[4], "rois edge"));
    by_id[cols[0]] = s;
  }
  std::vector<CubeState> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("rois: missing id: " + id);
    out.push_back(it->second);
  }
  return out;
}

// Feature assembly shared by features, train-clf, and eval. The DAE scheme
// trains its encoder on the (possibly overridden) ROI cubes right here, so
// the whole run stays a function of the seed; the net is kept next to the
// other artifacts.
Dataset assemble(const Loaded& in, const AppConfig& cfg, Scheme scheme,
                 const std::vector<CubeState>& rois, std::uint64_t seed,
                 const std::string& out_dir) {
  FeatureOptions opt;
  opt.raw_edge = cfg.raw_edge;
  DaeModel dae;
  if (scheme == Scheme::dae) {
    std::vector<Cube> cubes;
    for (std::size_t i = 0; i < in.phantoms.size(); ++i) {
      const Phantom& ph = in.phantoms[i];
      const CubeState roi = rois.empty() ? ph.roi : rois[i];
      cubes.push_back(
          normalize_unit(extract_cube({&ph.tmax, &ph.rbf, &ph.rbv}, roi)));
    }
    DaeConfig dc = cfg.dae;
    if (dc.channels.empty() || dc.channels[0] != 3)
      throw ConfigError("dae.channels must start at 3 for the parameter maps");
    if (dc.edge != cubes.front().edge)
      throw ConfigError("dae.edge " + std::to_string(dc.edge) +
                        " does not match the roi edge " +
                        std::to_string(cubes.front().edge));
    dae = dae_train(cubes, dc, Rng(seed).derive(0));
    nn::save_network(dae.net, (fs::path(out_dir) / "dae.qnet").string());
    opt.dae = &dae;
    return build_feature_dataset(in.phantoms, rois, scheme, opt);
  }
  return build_feature_dataset(in.phantoms, rois, scheme, opt);
}

// ---- subcommands ---------------------------------------------------------

void run_synth(const AppConfig& cfg, std::uint64_t seed,
               const std::string& out) {
  fs::create_directories(out);
  const std::array<int, 3> dims{cfg.synth_dims, cfg.synth_dims,
                                cfg.synth_dims};
  const auto specs =
      gen_dataset_specs(cfg.per_class, seed, dims, cfg.synth_roi_edge);
  std::string manifest =
      "id,label,corner_x,corner_y,corner_z,roi_edge,tmax,rbf,rbv\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Phantom ph = gen_phantom(specs[i]);
    char id[16];
    std::snprintf(id, sizeof(id), "s%04zu", i);
    const std::string tm = std::string(id) + "_tmax.vvol";
    const std::string bf = std::string(id) + "_rbf.vvol";
    const std::string bv = std::string(id) + "_rbv.vvol";
    save_vvol(ph.tmax, (fs::path(out) / tm).string());
    save_vvol(ph.rbf, (fs::path(out) / bf).string());
    save_vvol(ph.rbv, (fs::path(out) / bv).string());
    char line[192];
    std::snprintf(line, sizeof(line), "%s,%d,%d,%d,%d,%d,%s,%s,%s\n", id,
                  ph.label, ph.roi.corner[0], ph.roi.corner[1],
                  ph.roi.corner[2], ph.roi.edge, tm.c_str(), bf.c_str(),
                  bv.c_str());
    manifest += line;
  }
  spill((fs::path(out) / "manifest.csv").string(), manifest);
  std::printf("wrote %zu phantoms to %s\n", specs.size(), out.c_str());
}

void run_train_roi(const AppConfig& cfg, std::uint64_t seed,
                   const std::string& out, const std::string& data) {
  const Loaded in = load_dataset(data);
  for (const auto& ph : in.phantoms)
    if (ph.roi.edge != cfg.env.edge)
      throw ConfigError("env.edge " + std::to_string(cfg.env.edge) +
                        " does not match the dataset roi edge " +
                        std::to_string(ph.roi.edge));
  std::vector<RoiExample> examples;
  examples.reserve(in.phantoms.size());
  for (const auto& ph : in.phantoms) examples.push_back({&ph.tmax, ph.roi});
  QAgent agent = train_agent(examples, cfg.agent, cfg.env, seed);
  fs::create_directories(out);
  nn::save_network(agent.net, (fs::path(out) / "agent.qnet").string());
  std::printf("trained localization agent on %zu phantoms -> %s/agent.qnet\n",
              examples.size(), out.c_str());
}

void run_locate(const AppConfig& cfg, std::uint64_t seed,
                const std::string& out, const std::string& data,
                const std::string& model) {
  const Loaded in = load_dataset(data);
  QAgent agent;
  agent.net = nn::load_network(model);
  agent.pool = cfg.agent.pool;
  agent.history_len = cfg.env.history_len;
  const auto& layers = agent.net.layers();
  if (layers.empty() || layers.front()->kind() != nn::kConv3d ||
      layers.front()->meta()[0] !=
          static_cast<std::uint32_t>(cfg.env.history_len))
    throw ConfigError("model input does not match env.history_len");

  fs::create_directories(out);
  const Rng master(seed);
  std::string csv = "id,corner_x,corner_y,corner_z,edge,iou\n";
  double iou_sum = 0.0;
  for (std::size_t i = 0; i < in.phantoms.size(); ++i) {
    const Phantom& ph = in.phantoms[i];
    const CubeState found =
        localize(agent, ph.tmax, cfg.env, cfg.locate_starts, master.derive(i));
    const double overlap = iou(found, ph.roi);
    iou_sum += overlap;
    csv += in.ids[i] + "," + std::to_string(found.corner[0]) + "," +
           std::to_string(found.corner[1]) + "," +
           std::to_string(found.corner[2]) + "," +
           std::to_string(found.edge) + "," + f6(overlap) + "\n";
  }
  csv += "# mean_iou=" + f6(iou_sum / in.phantoms.size()) + "\n";
  spill((fs::path(out) / "rois.csv").string(), csv);
  std::printf("localized %zu phantoms -> %s/rois.csv (mean iou %s)\n",
              in.phantoms.size(), out.c_str(),
              f6(iou_sum / in.phantoms.size()).c_str());
}

void run_features(const AppConfig& cfg, std::uint64_t seed,
                  const std::string& out, const std::string& data,
                  const std::string& scheme_str, const std::string& rois_path) {
  const Scheme scheme = scheme_from_name(scheme_str);
  if (scheme == Scheme::raw || scheme == Scheme::roi || scheme == Scheme::roi_m)
    throw ConfigError("scheme " + scheme_str +
                      " produces cubes, not vectors; train-clf and eval "
                      "assemble it in memory");
  fs::create_directories(out);
  const Loaded in = load_dataset(data);
  const auto rois = rois_path.empty() ? std::vector<CubeState>{}
                                      : load_rois(rois_path, in.ids);
  const Dataset fd = assemble(in, cfg, scheme, rois, seed, out);

  std::string csv = "id,label";
  for (std::size_t j = 0; j < fd.samples.front().features.size(); ++j)
    csv += ",f" + std::to_string(j);
  csv += "\n";
  for (const auto& s : fd.samples) {
    csv += s.id + "," + std::to_string(s.label);
    for (float v : s.features) csv += "," + g9(v);
    csv += "\n";
  }
  spill((fs::path(out) / "features.csv").string(), csv);
  std::printf("wrote %zu x %zu %s features -> %s/features.csv\n",
              fd.samples.size(), fd.samples.front().features.size(),
              scheme_str.c_str(), out.c_str());
}

void run_train_clf(const AppConfig& cfg, std::uint64_t seed,
                   const std::string& out, const std::string& data,
                   const std::string& scheme_str, const std::string& kind_flag,
                   const std::string& rois_path) {
  const Scheme scheme = scheme_from_name(scheme_str);
  fs::create_directories(out);
  const Loaded in = load_dataset(data);
  const auto rois = rois_path.empty() ? std::vector<CubeState>{}
                                      : load_rois(rois_path, in.ids);
  Dataset fd = assemble(in, cfg, scheme, rois, seed, out);

  ClassifierSpec spec = cfg.clf;
  if (!kind_flag.empty()) spec.kind = kind_flag;
  if (spec.kind != "cnn" && !fd.samples.empty() && fd.samples.front().is_cube())
    fd = flatten_cubes(fd);
  spec.seed = Rng(seed).derive(1);
  auto clf = make_classifier(spec);
  clf->fit(fd.samples);
  const std::string name = spec.kind == "cnn" ? "model.qnet" : "model.clf";
  clf->save((fs::path(out) / name).string());
  std::printf("trained %s on %zu %s samples -> %s/%s\n", spec.kind.c_str(),
              fd.samples.size(), scheme_str.c_str(), out.c_str(),
              name.c_str());
}

void run_eval(const AppConfig& cfg, std::uint64_t seed, const std::string& out,
              const std::string& data, const std::string& scheme_str,
              const std::string& kind_flag, const std::string& mode,
              const std::string& rois_path) {
  const Scheme scheme = scheme_from_name(scheme_str);
  fs::create_directories(out);
  const Loaded in = load_dataset(data);
  const auto rois = rois_path.empty() ? std::vector<CubeState>{}
                                      : load_rois(rois_path, in.ids);
  Dataset fd = assemble(in, cfg, scheme, rois, seed, out);

  ClassifierSpec spec = cfg.clf;
  if (!kind_flag.empty()) spec.kind = kind_flag;
  if (spec.kind != "cnn" && !fd.samples.empty() && fd.samples.front().is_cube())
    fd = flatten_cubes(fd);
  const Rng master(seed);

  std::string csv =
      "mode,classifier,scheme,folds,mean,stddev,fold_accuracies,confusion\n";
  const auto add_row = [&](const EvalReport& r) {
    csv += r.mode + "," + spec.kind + "," + scheme_name(scheme) + "," +
           std::to_string(r.fold_accuracy.size()) + "," + f6(r.mean) + "," +
           f6(r.stddev) + ",";
    for (std::size_t i = 0; i < r.fold_accuracy.size(); ++i)
      csv += (i ? ";" : "") + f6(r.fold_accuracy[i]);
    csv += ",";
    for (std::size_t i = 0; i < r.confusion.size(); ++i) {
      if (i) csv += ";";
      for (std::size_t j = 0; j < r.confusion[i].size(); ++j)
        csv += (j ? ":" : "") + std::to_string(r.confusion[i][j]);
    }
    csv += "\n";
  };

  if (mode == "direct") {
    ClassifierSpec s = spec;
    s.seed = master.derive(1);
    add_row(evaluate_direct(fd, s, master.derive(3), cfg.eval_folds));
  } else {
    ClassifierSpec s1 = spec, s2 = spec;
    s1.seed = master.derive(1);
    s2.seed = master.derive(2);
    const auto [stage, final_r] =
        evaluate_cascaded(fd, s1, s2, master.derive(3), cfg.eval_folds);
    add_row(stage);
    add_row(final_r);
  }
  spill((fs::path(out) / "eval.csv").string(), csv);
  std::printf("evaluated %s/%s (%s) -> %s/eval.csv\n", spec.kind.c_str(),
              scheme_str.c_str(), mode.c_str(), out.c_str());
}

void run_report(const std::vector<std::string>& inputs,
                const std::string& out) {
  std::vector<ReportRow> rows;
  for (const auto& path : inputs) {
    const std::string text = slurp(path);
    bool header = true;
    for (const auto& raw : split(text, '\n')) {
      const std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      if (header) {
        if (line.rfind("mode,classifier", 0) != 0)
          throw DataError("report: unexpected header in " + path);
        header = false;
        continue;
      }
      const auto cols = split(line, ',');
      if (cols.size() != 8)
        throw DataError("report: expected 8 columns: " + line);
      ReportRow row;
      row.report.mode = cols[0];
      row.classifier = cols[1];
      row.scheme = scheme_from_name(cols[2]);
      const auto folds = parse_ll(cols[3], "report folds");
      row.report.mean = parse_num(cols[4], "report mean");
      row.report.stddev = parse_num(cols[5], "report stddev");
      for (const auto& a : split(cols[6], ';'))
        row.report.fold_accuracy.push_back(parse_num(a, "report accuracy"));
      if (static_cast<long long>(row.report.fold_accuracy.size()) != folds)
        throw DataError("report: fold count mismatch: " + line);
      for (const auto& r : split(cols[7], ';')) {
        std::vector<long> conf_row;
        for (const auto& v : split(r, ':'))
          conf_row.push_back(parse_ll(v, "report confusion"));
        row.report.confusion.push_back(std::move(conf_row));
      }
      rows.push_back(std::move(row));
    }
  }
  const ReportFiles files = report_emit(rows, out);
  std::printf("wrote %s and %s\n", files.csv.c_str(), files.svg.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collateral flow grading: phantoms, ROI localization, "
               "feature extraction, and cross-validated grading"};
  app.fallthrough();
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_dir = "out";
  app.add_option("--seed", seed, "master rng seed")->capture_default_str();
  app.add_option("--config", config_path,
                 "flat key=value config file overriding the defaults");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();

  const auto configured = [&]() {
    AppConfig c;
    if (!config_path.empty()) apply_config(c, config_path);
    return c;
  };

  auto* synth = app.add_subcommand("synth", "generate a phantom dataset");
  std::string per_class_flag;
  int dims_flag = 0, roi_edge_flag = 0;
  synth->add_option("--per-class", per_class_flag,
                    "counts per grade, e.g. 10,5,5");
  synth->add_option("--dims", dims_flag, "cubic volume edge, voxels");
  synth->add_option("--roi-edge", roi_edge_flag, "planted roi edge, voxels");
  synth->callback([&] {
    AppConfig c = configured();
    if (!per_class_flag.empty()) {
      const auto parts = split(per_class_flag, ',');
      if (parts.size() != 3) throw ConfigError("--per-class: need three counts");
      for (int g = 0; g < 3; ++g)
        c.per_class[g] = static_cast<int>(parse_ll(parts[g], "--per-class"));
    }
    if (dims_flag > 0) c.synth_dims = dims_flag;
    if (roi_edge_flag > 0) c.synth_roi_edge = roi_edge_flag;
    run_synth(c, seed, out_dir);
  });

  auto* troi = app.add_subcommand("train-roi",
                                  "train the q-learning localization agent");
  std::string troi_data;
  troi->add_option("--data", troi_data, "phantom dataset directory")
      ->required();
  troi->callback([&] { run_train_roi(configured(), seed, out_dir, troi_data); });

  auto* locate = app.add_subcommand("locate", "run the agent on a dataset");
  std::string loc_data, loc_model;
  locate->add_option("--data", loc_data, "phantom dataset directory")
      ->required();
  locate->add_option("--model", loc_model, "agent checkpoint")->required();
  locate->callback(
      [&] { run_locate(configured(), seed, out_dir, loc_data, loc_model); });

  auto* feats = app.add_subcommand("features",
                                   "extract feature vectors (DAE, HOG, LBP)");
  std::string feat_data, feat_scheme, feat_rois;
  feats->add_option("--data", feat_data, "phantom dataset directory")
      ->required();
  feats->add_option("--scheme", feat_scheme, "DAE | HOG | LBP")->required();
  feats->add_option("--rois", feat_rois, "roi override csv (from locate)");
  feats->callback([&] {
    run_features(configured(), seed, out_dir, feat_data, feat_scheme,
                 feat_rois);
  });

  auto* tclf = app.add_subcommand("train-clf", "fit a grading classifier");
  std::string tclf_data, tclf_scheme, tclf_kind, tclf_rois;
  tclf->add_option("--data", tclf_data, "phantom dataset directory")
      ->required();
  tclf->add_option("--scheme", tclf_scheme,
                   "RAW | ROI | ROI+M | DAE | HOG | LBP")
      ->required();
  tclf->add_option("--clf", tclf_kind, "cnn | knn | rf | svm");
  tclf->add_option("--rois", tclf_rois, "roi override csv (from locate)");
  tclf->callback([&] {
    run_train_clf(configured(), seed, out_dir, tclf_data, tclf_scheme,
                  tclf_kind, tclf_rois);
  });

  auto* eval = app.add_subcommand("eval", "cross-validated grading accuracy");
  std::string ev_data, ev_scheme, ev_kind, ev_rois, ev_mode = "direct";
  eval->add_option("--data", ev_data, "phantom dataset directory")->required();
  eval->add_option("--scheme", ev_scheme, "RAW | ROI | ROI+M | DAE | HOG | LBP")
      ->required();
  eval->add_option("--clf", ev_kind, "cnn | knn | rf | svm");
  eval->add_option("--mode", ev_mode, "direct | cascaded")
      ->check(CLI::IsMember({"direct", "cascaded"}))
      ->capture_default_str();
  eval->add_option("--rois", ev_rois, "roi override csv (from locate)");
  eval->callback([&] {
    run_eval(configured(), seed, out_dir, ev_data, ev_scheme, ev_kind, ev_mode,
             ev_rois);
  });

  auto* report = app.add_subcommand("report",
                                    "merge eval outputs into csv + svg");
  std::vector<std::string> report_inputs;
  report->add_option("--in", report_inputs, "eval.csv files")
      ->required()
      ->expected(-1);
  report->callback([&] { run_report(report_inputs, out_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fatal: %s\n", e.what());
    return 3;
  }
  return 0;
}
