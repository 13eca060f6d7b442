#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "CLI11.hpp"
#include "dcre/checkpoint.hpp"
#include "dcre/config.hpp"
#include "dcre/error.hpp"
#include "dcre/eval.hpp"
#include "dcre/io.hpp"
#include "dcre/parallel.hpp"
#include "dcre/pipeline.hpp"
#include "dcre/synthetic.hpp"
#include "json.hpp"

namespace dcre::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::vector<std::string> kCommands = {"gen-synth", "pretrain", "cluster",    "relabel", "train",
                                            "eval",      "sweep-phi", "export-pca", "all"};

struct Options {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  std::string phis = "0.15,0.1,0.05,0";
};

class Session {
 public:
  Session(const Options& opt, std::ostream& log) : opt_(opt), log_(log), out_(opt.out_dir) {
    Config raw;
    if (!opt.config_path.empty()) raw = Config::parse_file(opt.config_path);
    raw.apply_environment();
    for (const auto& o : opt.overrides) raw.apply_override(o);
    if (opt.seed) raw.set("train.seed", std::to_string(*opt.seed));
    cfg_ = load_experiment_config(raw);
    fs::create_directories(out_);
  }

  void run(const std::string& command) {
    if (command == "all") {
      if (cfg_.data.train.empty()) timed("gen-synth", [&] { gen_synth(); });
      timed("pretrain", [&] { pretrain_phase(); });
      timed("cluster", [&] { cluster_phase(); });
      timed("relabel", [&] { relabel_phase(); });
      timed("train", [&] { train_phase(); });
      timed("eval", [&] { eval_phase(); });
    } else if (command == "gen-synth") {
      timed(command, [&] { gen_synth(); });
    } else if (command == "pretrain") {
      timed(command, [&] { pretrain_phase(); });
    } else if (command == "cluster") {
      timed(command, [&] { cluster_phase(); });
    } else if (command == "relabel") {
      timed(command, [&] { relabel_phase(); });
    } else if (command == "train") {
      timed(command, [&] { train_phase(); });
    } else if (command == "eval") {
      timed(command, [&] { eval_phase(); });
    } else if (command == "sweep-phi") {
      timed(command, [&] { sweep_phase(); });
    } else if (command == "export-pca") {
      timed(command, [&] { pca_phase(); });
    }
    write_manifest(command);
  }

 private:
  template <typename F>
  void timed(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    log_ << "[" << name << "] start\n";
    body();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    timings_.emplace_back(name, secs);
    log_ << "[" << name << "] done in " << format_double(secs) << "s\n";
  }

  fs::path path(const std::string& name) const { return out_ / name; }

  void require(const fs::path& p, const std::string& producer) const {
    if (!fs::exists(p)) {
      throw DependencyError("missing input " + p.string() + "; run `dcre " + producer + "` first", producer);
    }
  }

  void output(const fs::path& p) { outputs_.insert(p); }

  void write_text(const std::string& name, const std::string& text) {
    write_file(path(name), text);
    output(path(name));
  }

  fs::path train_path() const { return cfg_.data.train.empty() ? path("train.jsonl") : fs::path(cfg_.data.train); }
  fs::path test_path() const { return cfg_.data.test.empty() ? path("test.jsonl") : fs::path(cfg_.data.test); }

  const Dataset& data() {
    if (data_) return *data_;
    const fs::path tr = train_path();
    const fs::path te = test_path();
    require(tr, "gen-synth");
    require(te, "gen-synth");
    corpus_["train"] = {tr.string(), file_checksum(tr)};
    corpus_["test"] = {te.string(), file_checksum(te)};
    data_ = prepare_dataset(load_jsonl(tr), load_jsonl(te), cfg_.model);
    log_ << "  corpus: " << data_->train_bags.size() << " train bags, " << data_->test_bags.size()
         << " test bags, " << data_->skipped_ids.size() << " sentences skipped\n";
    return *data_;
  }

  ModelParams load_checkpoint(const std::string& name, const std::string& producer) {
    require(path(name), producer);
    return load_model(path(name));
  }

  void gen_synth() {
    const auto corpus = generate_synthetic(cfg_.synthetic, cfg_.train.seed);
    write_jsonl(path("train.jsonl"), corpus.train);
    write_jsonl(path("test.jsonl"), corpus.test);
    output(path("train.jsonl"));
    output(path("test.jsonl"));
    data_.reset();
  }

  void pretrain_phase() {
    const Dataset& d = data();
    json vocab;
    vocab["relations"] = d.vocab.relations.names();
    vocab["words"] = d.vocab.words.words();
    write_text("vocab.json", vocab.dump(1) + "\n");
    TrainLog log;
    const ModelParams params = pretrain(d.train_bags, initial_params(d, cfg_), cfg_.train, &log);
    save_model(path("pretrain.ckpt"), params);
    output(path("pretrain.ckpt"));
    write_text("pretrain_log.csv", epoch_csv(log));
  }

  static std::string epoch_csv(const TrainLog& log) {
    std::string s = "epoch,loss\n";
    for (std::size_t e = 0; e < log.epoch_losses.size(); ++e) {
      s += std::to_string(e + 1) + "," + format_double(log.epoch_losses[e]) + "\n";
    }
    return s;
  }

  json record_json(const RelabelRecord& r) const {
    const auto& rel = data_->vocab.relations;
    json j;
    j["id"] = r.id;
    j["original"] = rel.name(r.original);
    j["outcome"] = outcome_name(r.outcome);
    if (r.outcome == RelabelOutcome::Relabeled) {
      j["new_label"] = rel.name(r.new_label);
      j["confidence"] = r.confidence;
    }
    j["noisy"] = r.noisy;
    return j;
  }

  RelabelRecord record_from_json(const json& j, const std::string& source) const {
    const auto& rel = data_->vocab.relations;
    auto index = [&](const std::string& name) {
      auto idx = rel.find(name);
      if (!idx) throw DataError(source + ": unknown relation '" + name + "'");
      return *idx;
    };
    RelabelRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.original = index(j.at("original").get<std::string>());
      r.outcome = parse_outcome(j.at("outcome").get<std::string>());
      if (r.outcome == RelabelOutcome::Relabeled) {
        r.new_label = index(j.at("new_label").get<std::string>());
        r.confidence = j.at("confidence").get<double>();
      }
      r.noisy = j.value("noisy", false);
    } catch (const json::exception& e) {
      throw DataError(source + ": malformed relabel record: " + e.what());
    }
    return r;
  }

  void cluster_phase() {
    const Dataset& d = data();
    const ModelParams params = load_checkpoint("pretrain.ckpt", "pretrain");
    const int na = d.vocab.relations.na_index();
    const auto partitions = detect_noise(d.train_bags, params, cfg_.train.phi, na);
    const auto res = cluster_noisy(d.train_bags, partitions, params, cfg_, na);
    log_ << "  detector flagged " << res.noisy_ids.size() << " sentences at phi=" << format_double(cfg_.train.phi)
         << "\n";

    std::vector<NamedTensor> tensors;
    std::string losses = "run,epoch,loss\n";
    for (std::size_t r = 0; r < res.runs.size(); ++r) {
      const std::string p = "run" + std::to_string(r) + ".";
      tensors.push_back({p + "centers", res.runs[r].centers});
      tensors.push_back({p + "relation", res.runs[r].relation});
      tensors.push_back({p + "bias", res.runs[r].bias});
      tensors.push_back({p + "noisy_q", res.noisy_q[r]});
      for (std::size_t e = 0; e < res.runs[r].epoch_losses.size(); ++e) {
        losses += std::to_string(r) + "," + std::to_string(e + 1) + "," + format_double(res.runs[r].epoch_losses[e]) +
                  "\n";
      }
    }
    if (!res.runs.empty()) {
      auto column = [](const std::vector<int>& v) {
        Matrix m(v.size(), 1);
        for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
        return m;
      };
      tensors.push_back({"pool.projected", res.pool_projected});
      tensors.push_back({"pool.labels", column(res.pool_labels)});
      tensors.push_back({"pool.cluster", column(res.pool_cluster)});
    }
    save_tensors(path("cluster_state.ckpt"), tensors);
    output(path("cluster_state.ckpt"));
    write_text("cluster_log.csv", losses);

    json j;
    j["phi"] = cfg_.train.phi;
    json retained = json::array();
    for (int r : res.retained) retained.push_back(d.vocab.relations.name(r));
    j["retained"] = retained;
    json valid = json::array();
    for (std::size_t b = 0; b < d.train_bags.size(); ++b) {
      if (partitions[b].valid >= 0) valid.push_back(d.train_bags[b].sentences[static_cast<std::size_t>(partitions[b].valid)].id);
    }
    j["valid"] = valid;
    json votes = json::array();
    for (const auto& v : res.votes) votes.push_back(record_json(v));
    j["votes"] = votes;
    write_text("cluster_votes.json", j.dump(1) + "\n");
  }

  void relabel_phase() {
    const Dataset& d = data();
    require(path("cluster_votes.json"), "cluster");
    const fs::path src = path("cluster_votes.json");
    json j;
    try {
      j = json::parse(read_file(src));
    } catch (const json::exception& e) {
      throw DataError(src.string() + ": " + e.what());
    }
    std::unordered_map<std::string, RelabelRecord> votes;
    for (const auto& v : j.at("votes")) {
      auto r = record_from_json(v, src.string());
      votes.emplace(r.id, std::move(r));
    }
    std::unordered_set<std::string> valid;
    for (const auto& v : j.at("valid")) valid.insert(v.get<std::string>());
    std::vector<int> retained;
    for (const auto& r : j.at("retained")) retained.push_back(d.vocab.relations.index_or_na(r.get<std::string>()));

    std::vector<RelabelRecord> records;
    std::string lines;
    for (const auto& bag : d.train_bags) {
      for (const auto& s : bag.sentences) {
        RelabelRecord rec;
        if (auto it = votes.find(s.id); it != votes.end()) {
          rec = it->second;
        } else {
          rec.id = s.id;
          rec.original = bag.label;
          rec.outcome = valid.count(s.id) != 0 ? RelabelOutcome::Kept : RelabelOutcome::Ignored;
        }
        lines += record_json(rec).dump() + "\n";
        records.push_back(std::move(rec));
      }
    }
    write_text("relabels.jsonl", lines);
    if (!d.truth.empty()) {
      const auto report = relabel_metrics(records, d.truth, retained, d.vocab.relations);
      write_text("relabel_report.json", relabel_report_json(report));
      log_ << "  detection recall " << format_double(report.detection_recall) << ", relabel precision "
           << format_double(report.relabel_precision) << "\n";
    }
  }

  void train_phase() {
    const Dataset& d = data();
    const ModelParams init = load_checkpoint("pretrain.ckpt", "pretrain");
    require(path("relabels.jsonl"), "relabel");
    std::vector<RelabelRecord> records;
    std::istringstream in(read_file(path("relabels.jsonl")));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const std::string where = path("relabels.jsonl").string() + ":" + std::to_string(lineno);
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw DataError(where + ": " + e.what());
      }
      records.push_back(record_from_json(j, where));
    }
    TrainLog log;
    const ModelParams params =
        train_final(d.train_bags, records, init, cfg_.train, &log, [&](int epoch, const ModelParams& p) {
          char name[32];
          std::snprintf(name, sizeof(name), "model_epoch_%02d.ckpt", epoch);
          save_model(path(name), p);
          output(path(name));
        });
    save_model(path("model.ckpt"), params);
    output(path("model.ckpt"));
    write_text("train_log.csv", epoch_csv(log));
  }

  void eval_phase() {
    const Dataset& d = data();
    const ModelParams params = load_checkpoint("model.ckpt", "train");
    const PRCurve curve = evaluate(d.test_bags, params, d.vocab.relations.na_index());
    write_text("pr_curve.csv", pr_curve_csv(curve));
    json j;
    j["auc"] = curve.auc;
    j["total_gold"] = curve.total_gold;
    j["p_at_100"] = curve.precision_at(100);
    j["p_at_200"] = curve.precision_at(200);
    j["p_at_300"] = curve.precision_at(300);
    write_text("eval.json", j.dump(2) + "\n");
    log_ << "  auc " << format_double(curve.auc) << "\n";
  }

  void sweep_phase() {
    std::vector<double> phis;
    std::stringstream ss(opt_.phis);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        phis.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ConfigError("--phis: '" + item + "' is not a number");
      }
    }
    const auto rows = phi_sweep(data(), phis, cfg_);
    std::vector<std::pair<double, double>> table;
    for (const auto& r : rows) {
      table.emplace_back(r.phi, r.auc);
      log_ << "  phi " << format_double(r.phi) << " auc " << format_double(r.auc) << "\n";
    }
    write_text("phi_sweep.csv", phi_sweep_csv(table));
  }

  void pca_phase() {
    require(path("cluster_state.ckpt"), "cluster");
    const auto tensors = load_tensors(path("cluster_state.ckpt"));
    auto find = [&](const std::string& name) -> const Matrix& {
      for (const auto& t : tensors) {
        if (t.name == name) return t.value;
      }
      throw DataError(path("cluster_state.ckpt").string() + " has no tensor '" + name +
                      "' (no sentence was flagged noisy)");
    };
    const Matrix& projected = find("pool.projected");
    auto ints = [](const Matrix& m) {
      std::vector<int> v(m.rows());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<int>(m(i, 0));
      return v;
    };
    const auto labels = ints(find("pool.labels"));
    const auto clusters = ints(find("pool.cluster"));
    Rng rng = Rng(cfg_.train.seed).split("pca");
    const auto pca = pca_project(projected, 2, rng);
    write_text("pca.csv", pca_csv(pca.coords, clusters, labels));
  }

  void write_manifest(const std::string& command) {
    const fs::path mpath = path("manifest.json");
    json m;
    if (fs::exists(mpath)) {
      try {
        m = json::parse(read_file(mpath));
      } catch (const json::exception&) {
        m = json();
      }
    }
    m["version"] = 1;
    m["command"] = command;
    m["seed"] = cfg_.train.seed;
    json config;
    const Config effective = to_config(cfg_);
    for (const auto& [k, v] : effective.entries()) config[k] = v;
    m["config"] = config;
    for (const auto& [split, entry] : corpus_) {
      m["corpus"][split] = {{"path", entry.first}, {"checksum", entry.second}};
    }
    for (const auto& [name, secs] : timings_) m["phases"][name] = {{"seconds", secs}};
    for (const auto& p : outputs_) m["outputs"][p.filename().string()] = file_checksum(p);
    if (m.contains("outputs")) {
      json kept = json::object();
      for (const auto& [name, sum] : m["outputs"].items()) {
        if (fs::exists(path(name))) kept[name] = sum;
      }
      m["outputs"] = kept;
    }
    write_file(mpath, m.dump(2) + "\n");
  }

  Options opt_;
  std::ostream& log_;
  fs::path out_;
  ExperimentConfig cfg_;
  std::optional<Dataset> data_;
  std::map<std::string, std::pair<std::string, std::string>> corpus_;
  std::vector<std::pair<std::string, double>> timings_;
  std::set<fs::path> outputs_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Distant-supervision relation extraction with noise detection and cluster relabeling", "dcre"};
  std::string commands;
  for (const auto& c : kCommands) commands += (commands.empty() ? "" : ", ") + c;
  app.add_option("command", opt.command, "One of: " + commands)->required();
  app.add_option("--config", opt.config_path, "INI config file");
  app.add_option("--seed", opt.seed, "Overrides train.seed");
  app.add_option("--threads", opt.threads, "Worker thread cap (0 = hardware)");
  app.add_option("--out", opt.out_dir, "Artifact directory")->capture_default_str();
  app.add_option("--set", opt.overrides, "section.key=value override (repeatable)");
  app.add_option("--phis", opt.phis, "Comma-separated thresholds for sweep-phi")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  }
  if (std::find(kCommands.begin(), kCommands.end(), opt.command) == kCommands.end()) {
    err << "usage error: unknown command '" << opt.command << "' (expected one of: " << commands << ")\n";
    return kUsage;
  }
  set_max_threads(opt.threads);
  try {
    Session session(opt, out);
    session.run(opt.command);
  } catch (const DependencyError& e) {
    err << "dependency error: " << e.what() << "\n";
    return kDependency;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}

}  // namespace dcre::cli
