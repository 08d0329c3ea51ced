// hdkit command-line driver: validate/run IR programs, train and run the
// classification and clustering pipelines on any backend, and sweep
// approximation configurations against a fixed trained model.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <cstdio>
#include <sstream>

#include "hdkit/apps/cluster.hpp"
#include "hdkit/ir/text.hpp"
#include "hdkit/ir/validate.hpp"
#include "hdkit/ops.hpp"
#include "hdkit/passes/passes.hpp"
#include "hdkit/serialize.hpp"

namespace ir = hdkit::ir;
namespace apps = hdkit::apps;
namespace passes = hdkit::passes;
using hdkit::ElementType;
using hdkit::Error;
using hdkit::PerforationSpec;
using hdkit::backend::AccelProfile;
using hdkit::backend::BackendTag;
using hdkit::backend::Value;

namespace {

// --- sweep configuration -------------------------------------------------------

struct SweepEntry {
  std::string name;
  ir::SimilarityTag similarity = ir::SimilarityTag::Cosine;
  std::optional<ElementType> binarize;
  bool binarize_reduce = false;
  std::optional<ElementType> reduce_ty;
  std::optional<std::string> perf_encode;      // "begin:end:stride", D tokens ok
  std::optional<std::string> perf_similarity;
};

// begin/end tokens: an integer, or D, D/2, D/4 resolved against the target
// op's reduction length.
std::int64_t parse_extent(const std::string& tok, std::int64_t axis_len) {
  if (tok == "D") return axis_len;
  if (tok == "D/2") return axis_len / 2;
  if (tok == "D/4") return axis_len / 4;
  try {
    std::size_t used = 0;
    std::int64_t v = std::stoll(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error("bad perforation extent '" + tok + "' (integer, D, D/2 or D/4)");
  }
}

PerforationSpec parse_perf_spec(const std::string& text, std::int64_t axis_len) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t colon = text.find(':', start);
    parts.push_back(text.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3)
    throw Error("perforation spec '" + text + "' must be begin:end:stride");
  return PerforationSpec{parse_extent(parts[0], axis_len), parse_extent(parts[1], axis_len),
                         parse_extent(parts[2], axis_len)};
}

std::vector<SweepEntry> parse_sweep_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open sweep file '" + path + "'");
  std::vector<SweepEntry> entries;
  std::set<std::string> names;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream is(line);
    std::string head;
    if (!(is >> head)) continue;
    if (head != "config")
      throw Error("sweep file line " + std::to_string(line_no) + ": expected 'config'");
    std::string name;
    is >> name;
    if (name.empty() || name.back() != ':')
      throw Error("sweep file line " + std::to_string(line_no) + ": expected 'config <name>:'");
    name.pop_back();
    if (!names.insert(name).second)
      throw Error("sweep file line " + std::to_string(line_no) + ": duplicate config '" + name + "'");
    SweepEntry e;
    e.name = name;
    std::string kv;
    while (is >> kv) {
      std::size_t eq = kv.find('=');
      if (eq == std::string::npos)
        throw Error("sweep file line " + std::to_string(line_no) + ": expected key=value, got '" + kv + "'");
      std::string key = kv.substr(0, eq);
      std::string val = kv.substr(eq + 1);
      if (key == "similarity") {
        if (val == "cosine") e.similarity = ir::SimilarityTag::Cosine;
        else if (val == "hamming") e.similarity = ir::SimilarityTag::Hamming;
        else throw Error("sweep file line " + std::to_string(line_no) + ": unknown similarity '" + val + "'");
      } else if (key == "binarize") {
        e.binarize = val == "true" ? ElementType::Bin1 : hdkit::element_type_from_string(val);
      } else if (key == "binarize_reduce") {
        e.binarize_reduce = true;
        if (val != "true") e.reduce_ty = hdkit::element_type_from_string(val);
      } else if (key == "perf_encode") {
        e.perf_encode = val;
      } else if (key == "perf_similarity") {
        e.perf_similarity = val;
      } else {
        throw Error("sweep file line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      }
    }
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw Error("sweep file '" + path + "' defines no configs");
  return entries;
}

// Build the per-config inference program for a trained model.
ir::Program config_program(const SweepEntry& e, std::int64_t n, std::int64_t f,
                           std::int64_t d, std::int64_t k) {
  ir::Program prog = apps::make_inference_program(n, f, d, k, e.similarity);
  if (e.binarize) {
    passes::BinarizeConfig cfg;
    cfg.binarized_ty = *e.binarize;
    cfg.binarize_reduce = e.binarize_reduce;
    cfg.reduce_ty = e.reduce_ty;
    prog = passes::binarize(prog, cfg);
  }
  if (e.perf_encode) {
    std::string node = apps::inference_encode_node(prog);
    std::int64_t len = passes::reduction_length_of(prog, node);
    prog = passes::attach_perforation(prog, node, parse_perf_spec(*e.perf_encode, len));
  }
  if (e.perf_similarity) {
    std::string node = apps::inference_similarity_node(prog);
    std::int64_t len = passes::reduction_length_of(prog, node);
    prog = passes::attach_perforation(prog, node, parse_perf_spec(*e.perf_similarity, len));
  }
  return prog;
}

// --- shared option plumbing ----------------------------------------------------

struct CommonOpts {
  std::string backend = "interp";
  std::uint64_t seed = 0;
  std::string device_profile;
};

BackendTag backend_of(const CommonOpts& o) {
  return hdkit::backend::backend_from_string(o.backend);
}

std::optional<AccelProfile> profile_of(const CommonOpts& o) {
  if (o.device_profile.empty()) return std::nullopt;
  return AccelProfile::from_file(o.device_profile);
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--backend", o.backend, "Execution backend: interp, cpu, accel-sim")
      ->check(CLI::IsMember({"interp", "cpu", "accel-sim"}));
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--device-profile", o.device_profile,
                  "Device profile file for the accel-sim backend");
}

struct PassOpts {
  std::string binarize;        // "", "true", or an element type
  std::string binarize_reduce; // "", "true", or an element type
  std::vector<std::string> perforations;  // node:begin:end:stride
};

void add_pass_flags(CLI::App* cmd, PassOpts& o) {
  cmd->add_option("--binarize", o.binarize,
                  "Run automatic binarization (optionally to a type, e.g. bin1)")
      ->expected(0, 1)
      ->default_str("")
      ->type_name("[TYPE]");
  cmd->add_option("--binarize-reduce", o.binarize_reduce,
                  "Also retarget reduce-op operands (optionally to a type, e.g. i32)")
      ->expected(0, 1)
      ->type_name("[TYPE]");
  cmd->add_option("--perforate", o.perforations,
                  "Attach a perforation spec: <node>:<begin>:<end>:<stride>");
}

ir::Program apply_pass_flags(ir::Program prog, const PassOpts& o, CLI::App* cmd) {
  bool want_binarize = cmd->count("--binarize") > 0;
  bool want_reduce = cmd->count("--binarize-reduce") > 0;
  if (want_binarize || want_reduce) {
    passes::BinarizeConfig cfg;
    if (!o.binarize.empty() && o.binarize != "true")
      cfg.binarized_ty = hdkit::element_type_from_string(o.binarize);
    cfg.binarize_reduce = want_reduce;
    if (!o.binarize_reduce.empty() && o.binarize_reduce != "true")
      cfg.reduce_ty = hdkit::element_type_from_string(o.binarize_reduce);
    prog = passes::binarize(prog, cfg);
  }
  for (const std::string& spec : o.perforations) {
    std::size_t colon = spec.find(':');
    if (colon == std::string::npos)
      throw Error("--perforate expects <node>:<begin>:<end>:<stride>");
    std::string node = spec.substr(0, colon);
    std::int64_t len = passes::reduction_length_of(prog, node);
    prog = passes::attach_perforation(prog, node, parse_perf_spec(spec.substr(colon + 1), len));
  }
  return prog;
}

// --- subcommands ----------------------------------------------------------------

int cmd_validate(const std::string& program_file) {
  ir::Program p = ir::load_program(program_file);
  ir::validate(p);
  std::cout << "ok: " << p.nodes.size() << " nodes, " << p.edges.size() << " edges\n";
  return 0;
}

Value parse_input_value(const std::string& spec, const ir::ValueType& want) {
  // <name>=<path.hdcm> or <name>=<integer literal>
  if (spec.find_first_not_of("-0123456789") == std::string::npos)
    return Value(hdkit::Scalar::of_int(std::stoll(spec)));
  hdkit::Hypermatrix m = hdkit::io::load_hypermatrix(spec);
  if (want.rank == ir::ValueType::Rank::Vector) {
    if (m.rows() != 1)
      throw Error("binding expects a hypervector; give a 1-row matrix file");
    return Value(m.row_copy(0));
  }
  return Value(std::move(m));
}

int cmd_run(const std::string& program_file, const std::vector<std::string>& input_specs,
            const CommonOpts& common) {
  ir::Program p = ir::load_program(program_file);
  ir::validate(p);
  std::map<std::string, Value> inputs;
  for (const std::string& spec : input_specs) {
    std::size_t eq = spec.find('=');
    if (eq == std::string::npos) throw Error("--input expects <name>=<file|int>");
    std::string name = spec.substr(0, eq);
    const ir::InputBinding* b = p.find_input(name);
    if (b == nullptr) throw Error("program has no input binding '" + name + "'");
    inputs.emplace(name, parse_input_value(spec.substr(eq + 1), b->type));
  }
  auto profile = profile_of(common);
  hdkit::backend::ExecReport rep = hdkit::backend::execute(
      p, inputs, backend_of(common), common.seed, profile ? &*profile : nullptr);
  std::cout << rep.to_kv_text();
  return 0;
}

int cmd_classify(CLI::App* cmd, const std::string& train_csv, const std::string& test_csv,
                 const std::string& format, bool skip_header, bool normalize,
                 std::int64_t dim, const std::string& similarity, std::int64_t epochs,
                 const std::string& save_model_path, const PassOpts& pass_opts,
                 const CommonOpts& common) {
  apps::CsvFormat fmt = apps::csv_format_from_string(format);
  apps::Dataset train = apps::load_dataset(train_csv, fmt, skip_header, normalize);
  apps::Dataset test = apps::load_dataset(test_csv, fmt, skip_header, normalize);
  if (test.feature_count() != train.feature_count())
    throw Error("train/test feature counts differ");
  test.class_count = std::max(test.class_count, train.class_count);

  apps::TrainOptions opt;
  opt.dim = dim;
  opt.similarity = similarity == "hamming" ? ir::SimilarityTag::Hamming
                                           : ir::SimilarityTag::Cosine;
  opt.epochs = epochs;
  opt.seed = common.seed;
  opt.backend = backend_of(common);
  auto profile = profile_of(common);
  opt.profile = profile ? &*profile : nullptr;

  apps::ClassifierModel model = apps::train_classifier(train, opt);
  if (!save_model_path.empty()) apps::save_model(save_model_path, model);

  ir::Program prog = apps::make_inference_program(test.samples(), test.feature_count(),
                                                  dim, train.class_count, opt.similarity);
  prog = apply_pass_flags(std::move(prog), pass_opts, cmd);
  apps::InferResult res = apps::run_inference_program(prog, model, test, opt.backend, opt.profile);

  std::cout << "samples=" << test.samples() << '\n';
  std::cout << "classes=" << train.class_count << '\n';
  std::cout << "dim=" << dim << '\n';
  std::cout << "similarity=" << similarity << '\n';
  char acc[32];
  std::snprintf(acc, sizeof acc, "%.6f", res.accuracy);
  std::cout << "accuracy=" << acc << '\n';
  std::cout << "wall_seconds=" << res.report.wall_seconds << '\n';
  if (res.report.accel) {
    std::cout << "accel.cycles=" << res.report.accel->cycles << '\n';
    std::cout << "accel.bytes_moved=" << res.report.accel->bytes_moved << '\n';
    std::cout << "accel.elements_processed=" << res.report.accel->elements_processed << '\n';
  }
  return 0;
}

int cmd_cluster(const std::string& data_csv, const std::string& format, bool skip_header,
                bool normalize, std::int64_t k, std::int64_t dim, std::int64_t iters,
                const CommonOpts& common) {
  apps::Dataset ds =
      apps::load_dataset(data_csv, apps::csv_format_from_string(format), skip_header, normalize);
  apps::ClusterOptions opt;
  opt.k = k;
  opt.dim = dim;
  opt.max_iters = iters;
  opt.seed = common.seed;
  opt.backend = backend_of(common);
  auto profile = profile_of(common);
  opt.profile = profile ? &*profile : nullptr;

  auto t0 = std::chrono::steady_clock::now();
  apps::ClusterState st = apps::cluster(ds, opt);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<std::int64_t> sizes(static_cast<std::size_t>(k), 0);
  for (std::int64_t a : st.assignments) ++sizes[static_cast<std::size_t>(a)];
  std::cout << "samples=" << ds.samples() << '\n';
  std::cout << "k=" << k << '\n';
  std::cout << "iterations=" << st.iterations << '\n';
  for (std::int64_t c = 0; c < k; ++c)
    std::cout << "cluster." << c << ".size=" << sizes[static_cast<std::size_t>(c)] << '\n';
  std::cout << "objective=" << st.objective_history.back() << '\n';
  std::cout << "wall_seconds=" << secs << '\n';
  return 0;
}

int cmd_sweep(const std::string& train_csv, const std::string& test_csv,
              const std::string& sweep_file, const std::string& format, bool skip_header,
              bool normalize, std::int64_t dim, int repeats, const CommonOpts& common) {
  apps::CsvFormat fmt = apps::csv_format_from_string(format);
  apps::Dataset train = apps::load_dataset(train_csv, fmt, skip_header, normalize);
  apps::Dataset test = apps::load_dataset(test_csv, fmt, skip_header, normalize);
  test.class_count = std::max(test.class_count, train.class_count);
  std::vector<SweepEntry> entries = parse_sweep_file(sweep_file);

  // one model, trained offline with the baseline similarity, shared by every
  // configuration; the sweep measures inference only
  apps::TrainOptions opt;
  opt.dim = dim;
  opt.similarity = ir::SimilarityTag::Cosine;
  opt.seed = common.seed;
  opt.backend = backend_of(common);
  auto profile = profile_of(common);
  opt.profile = profile ? &*profile : nullptr;
  apps::ClassifierModel model = apps::train_classifier(train, opt);

  struct Row {
    std::string name;
    double accuracy;
    double seconds;
  };
  std::vector<Row> rows;
  for (const SweepEntry& e : entries) {
    try {
      ir::Program prog =
          config_program(e, test.samples(), test.feature_count(), dim, train.class_count);
      double best = 0.0, acc = 0.0;
      for (int r = 0; r < repeats; ++r) {
        apps::InferResult res =
            apps::run_inference_program(prog, model, test, opt.backend, opt.profile);
        acc = res.accuracy;
        best = r == 0 ? res.report.wall_seconds : std::min(best, res.report.wall_seconds);
      }
      rows.push_back(Row{e.name, acc, best});
    } catch (const Error& err) {
      std::cerr << "config " << e.name << " skipped: " << err.what() << '\n';
    }
  }
  if (rows.empty()) throw Error("every sweep configuration failed");

  double baseline = rows.front().seconds;
  for (const Row& r : rows)
    if (r.name == "I") baseline = r.seconds;

  std::cout << "config\taccuracy\twall_seconds\tspeedup\n";
  std::cout.setf(std::ios::fixed);
  for (const Row& r : rows) {
    std::cout.precision(6);
    std::cout << r.name << '\t' << r.accuracy << '\t' << r.seconds << '\t';
    std::cout.precision(3);
    std::cout << baseline / r.seconds << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hdkit: hyperdimensional computing compiler and runtime"};
  app.require_subcommand(1);

  // validate
  std::string program_file;
  CLI::App* validate = app.add_subcommand("validate", "Parse and validate a program file");
  validate->add_option("program", program_file, "Program text file")->required();

  // run
  CommonOpts run_common;
  std::vector<std::string> run_inputs;
  std::string run_program_file;
  CLI::App* run = app.add_subcommand("run", "Execute a program file");
  run->add_option("program", run_program_file, "Program text file")->required();
  run->add_option("--input", run_inputs, "Bind an input: <name>=<file.hdcm|int>");
  add_common(run, run_common);

  // classify
  CommonOpts cls_common;
  PassOpts cls_pass;
  std::string train_csv, test_csv, cls_format = "csv_label_first";
  std::string similarity = "cosine", save_model_path;
  std::int64_t cls_dim = 10240, cls_epochs = 0;
  bool cls_skip_header = false, cls_normalize = false;
  CLI::App* classify = app.add_subcommand("classify", "Train and evaluate HD classification");
  classify->add_option("train", train_csv, "Training CSV")->required();
  classify->add_option("test", test_csv, "Test CSV")->required();
  classify->add_option("--format", cls_format, "csv_label_first or isolet");
  classify->add_flag("--skip-header", cls_skip_header, "Skip the first CSV line");
  classify->add_flag("--normalize", cls_normalize, "Z-score features per column");
  classify->add_option("--dim", cls_dim, "Encoding dimension D");
  classify->add_option("--similarity", similarity, "cosine or hamming")
      ->check(CLI::IsMember({"cosine", "hamming"}));
  classify->add_option("--epochs", cls_epochs, "Perceptron refinement passes");
  classify->add_option("--save-model", save_model_path, "Write the trained model here");
  add_pass_flags(classify, cls_pass);
  add_common(classify, cls_common);

  // cluster
  CommonOpts clu_common;
  std::string data_csv, clu_format = "csv_label_first";
  std::int64_t clu_k = 2, clu_dim = 2048, clu_iters = 32;
  bool clu_skip_header = false, clu_normalize = false;
  CLI::App* clusterc = app.add_subcommand("cluster", "K-means clustering over HD encodings");
  clusterc->add_option("data", data_csv, "Data CSV")->required();
  clusterc->add_option("--format", clu_format, "csv_label_first or isolet");
  clusterc->add_flag("--skip-header", clu_skip_header, "Skip the first CSV line");
  clusterc->add_flag("--normalize", clu_normalize, "Z-score features per column");
  clusterc->add_option("--k", clu_k, "Cluster count");
  clusterc->add_option("--dim", clu_dim, "Encoding dimension D");
  clusterc->add_option("--iters", clu_iters, "Maximum iterations");
  add_common(clusterc, clu_common);

  // sweep
  CommonOpts sw_common;
  std::string sw_train, sw_test, sweep_file, sw_format = "csv_label_first";
  std::int64_t sw_dim = 10240;
  int sw_repeats = 3;
  bool sw_skip_header = false, sw_normalize = false;
  CLI::App* sweep = app.add_subcommand("sweep", "Run approximation configurations");
  sweep->add_option("train", sw_train, "Training CSV")->required();
  sweep->add_option("test", sw_test, "Test CSV")->required();
  sweep->add_option("--sweep-file", sweep_file, "Configuration file")->required();
  sweep->add_option("--format", sw_format, "csv_label_first or isolet");
  sweep->add_flag("--skip-header", sw_skip_header, "Skip the first CSV line");
  sweep->add_flag("--normalize", sw_normalize, "Z-score features per column");
  sweep->add_option("--dim", sw_dim, "Encoding dimension D");
  sweep->add_option("--repeats", sw_repeats, "Timing repeats per config (min is kept)");
  add_common(sweep, sw_common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(program_file);
    if (run->parsed()) return cmd_run(run_program_file, run_inputs, run_common);
    if (classify->parsed())
      return cmd_classify(classify, train_csv, test_csv, cls_format, cls_skip_header,
                          cls_normalize, cls_dim, similarity, cls_epochs, save_model_path,
                          cls_pass, cls_common);
    if (clusterc->parsed())
      return cmd_cluster(data_csv, clu_format, clu_skip_header, clu_normalize, clu_k,
                         clu_dim, clu_iters, clu_common);
    if (sweep->parsed())
      return cmd_sweep(sw_train, sw_test, sweep_file, sw_format, sw_skip_header,
                       sw_normalize, sw_dim, sw_repeats, sw_common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
