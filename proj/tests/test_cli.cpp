#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hdkit/ir/builder.hpp"
#include "hdkit/ir/text.hpp"
#include "hdkit/ops.hpp"
#include "hdkit/serialize.hpp"

using namespace hdkit;

namespace {

struct CmdResult {
  int exit_code;
  std::string out;
  std::string err;
};

CmdResult run_cli(const std::string& args) {
  std::string out_path = "/tmp/hdkit_cli_out.txt";
  std::string err_path = "/tmp/hdkit_cli_err.txt";
  std::string cmd = std::string(HDKIT_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
  int status = std::system(cmd.c_str());
  auto slurp = [](const std::string& p) {
    std::ifstream f(p);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  return CmdResult{WEXITSTATUS(status), slurp(out_path), slurp(err_path)};
}

void write_blobs(const std::string& train, const std::string& test) {
  // deterministic two-blob data shared by train and test
  CounterRng rng(17, 5);
  std::uint64_t ctr = 0;
  auto emit = [&](const std::string& path, int per_class) {
    std::ofstream f(path);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < per_class; ++i) {
        f << c;
        for (int j = 0; j < 12; ++j) {
          double mean = CounterRng(100 + static_cast<std::uint64_t>(c), 7)
                            .gaussian(static_cast<std::uint64_t>(j)) * 2.0;
          f << ',' << mean + 0.5 * rng.gaussian(ctr++);
        }
        f << '\n';
      }
  };
  emit(train, 25);
  emit(test, 10);
}

std::string listing1_path() {
  static std::string path = [] {
    ir::Builder b(7);
    auto q = b.input("query", ir::ValueType::vector(ElementType::F32, 16));
    auto p = b.input("projection", ir::ValueType::matrix(ElementType::F32, 16, 128));
    auto c = b.input("classes", ir::ValueType::matrix(ElementType::F32, 5, 128));
    auto label = b.arg_min(b.hamming_distance(b.sign(b.matmul(q, p)), c));
    b.output("label", label);
    std::string file = "/tmp/hdkit_listing1.hdcir";
    ir::save_program(file, b.build());

    Hypermatrix qm(ElementType::F32, 1, 16);
    qm.set_row(0, ops::gaussian_hv(16, ElementType::F32, 21));
    io::save_hypermatrix("/tmp/hdkit_query.hdcm", qm);
    io::save_hypermatrix("/tmp/hdkit_proj.hdcm", ops::gaussian_hm(16, 128, ElementType::F32, 22));
    io::save_hypermatrix("/tmp/hdkit_classes.hdcm", ops::random_hm(5, 128, ElementType::F32, 23));
    return file;
  }();
  return path;
}

}  // namespace

TEST_CASE("cli validate accepts the golden program") {
  CmdResult r = run_cli("validate " + listing1_path());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("ok:") != std::string::npos);
}

TEST_CASE("cli validate rejects a cyclic program with 'cycle' and exit 1") {
  std::string path = "/tmp/hdkit_cyclic.hdcir";
  std::ofstream(path) << "node a primitive sign_flip\n"
                         "node b primitive sign_flip\n"
                         "edge a:0 -> b:0 vec:4 f32\n"
                         "edge b:0 -> a:0 vec:4 f32\n";
  CmdResult r = run_cli("validate " + path);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("cycle") != std::string::npos);
}

TEST_CASE("cli run prints the golden label (interpreter-derived)") {
  listing1_path();
  CmdResult r = run_cli("run /tmp/hdkit_listing1.hdcir --input query=/tmp/hdkit_query.hdcm "
                        "--input projection=/tmp/hdkit_proj.hdcm "
                        "--input classes=/tmp/hdkit_classes.hdcm");
  CHECK(r.exit_code == 0);
  // frozen from the reference interpreter on these seeded inputs
  CHECK(r.out.find("output.label.value=0") != std::string::npos);
  CHECK(r.out.find("output.label.type=scalar i64") != std::string::npos);

  // identical across backends
  CmdResult rc = run_cli("run /tmp/hdkit_listing1.hdcir --backend cpu "
                         "--input query=/tmp/hdkit_query.hdcm "
                         "--input projection=/tmp/hdkit_proj.hdcm "
                         "--input classes=/tmp/hdkit_classes.hdcm");
  CHECK(rc.out.find("output.label.value=0") != std::string::npos);
}

TEST_CASE("cli run without a binding names it and exits nonzero") {
  listing1_path();
  CmdResult r = run_cli("run /tmp/hdkit_listing1.hdcir --input query=/tmp/hdkit_query.hdcm");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("projection") != std::string::npos);
}

TEST_CASE("cli classify and sweep: config I equals the flag-free run, table reproducible") {
  write_blobs("/tmp/hdkit_train.csv", "/tmp/hdkit_test.csv");
  CmdResult plain = run_cli(
      "classify /tmp/hdkit_train.csv /tmp/hdkit_test.csv --dim 512 --seed 3 --backend cpu");
  REQUIRE(plain.exit_code == 0);
  std::string plain_acc;
  for (std::istringstream is(plain.out); std::getline(is, plain_acc);)
    if (plain_acc.rfind("accuracy=", 0) == 0) break;

  CmdResult sweep = run_cli(
      "sweep /tmp/hdkit_train.csv /tmp/hdkit_test.csv --sweep-file " +
      std::string(HDKIT_PRESETS_DIR) + "/table3.sweep --dim 512 --seed 3 --backend cpu --repeats 1");
  REQUIRE(sweep.exit_code == 0);
  // config I row carries the same accuracy as the pass-free classify
  std::istringstream table(sweep.out);
  std::string line, config_i_acc;
  while (std::getline(table, line)) {
    if (line.rfind("I\t", 0) == 0) {
      config_i_acc = line.substr(2, line.find('\t', 2) - 2);
      break;
    }
  }
  REQUIRE(!config_i_acc.empty());
  CHECK(std::stod(plain_acc.substr(9)) == std::stod(config_i_acc));

  // accuracies (not timings) are bit-identical across runs
  CmdResult again = run_cli(
      "sweep /tmp/hdkit_train.csv /tmp/hdkit_test.csv --sweep-file " +
      std::string(HDKIT_PRESETS_DIR) + "/table3.sweep --dim 512 --seed 3 --backend cpu --repeats 1");
  auto accuracies = [](const std::string& text) {
    std::vector<std::string> acc;
    std::istringstream is(text);
    std::string l;
    std::getline(is, l);  // header
    while (std::getline(is, l)) {
      std::size_t t1 = l.find('\t');
      std::size_t t2 = l.find('\t', t1 + 1);
      acc.push_back(l.substr(t1 + 1, t2 - t1 - 1));
    }
    return acc;
  };
  CHECK(accuracies(sweep.out) == accuracies(again.out));
  CHECK(accuracies(sweep.out).size() == 10);
}

TEST_CASE("cli classify --binarize --similarity hamming matches config III accuracy") {
  write_blobs("/tmp/hdkit_train.csv", "/tmp/hdkit_test.csv");
  CmdResult bin = run_cli(
      "classify /tmp/hdkit_train.csv /tmp/hdkit_test.csv --dim 512 --seed 3 "
      "--similarity hamming --binarize");
  REQUIRE(bin.exit_code == 0);
  CmdResult sweep = run_cli(
      "sweep /tmp/hdkit_train.csv /tmp/hdkit_test.csv --sweep-file " +
      std::string(HDKIT_PRESETS_DIR) + "/table3.sweep --dim 512 --seed 3 --repeats 1");
  std::string bin_acc;
  for (std::istringstream is(bin.out); std::getline(is, bin_acc);)
    if (bin_acc.rfind("accuracy=", 0) == 0) break;
  std::istringstream table(sweep.out);
  std::string line, iii;
  while (std::getline(table, line))
    if (line.rfind("III\t", 0) == 0) iii = line.substr(4, line.find('\t', 4) - 4);
  REQUIRE(!iii.empty());
  CHECK(std::stod(bin_acc.substr(9)) == std::stod(iii));
}

TEST_CASE("cli cluster reports nonempty clusters on blob data") {
  write_blobs("/tmp/hdkit_train.csv", "/tmp/hdkit_test.csv");
  CmdResult r = run_cli("cluster /tmp/hdkit_train.csv --k 3 --dim 512 --seed 4");
  REQUIRE(r.exit_code == 0);
  for (int c = 0; c < 3; ++c) {
    std::string key = "cluster." + std::to_string(c) + ".size=";
    std::size_t pos = r.out.find(key);
    REQUIRE(pos != std::string::npos);
    CHECK(r.out[pos + key.size()] != '0');
  }
}

TEST_CASE("cli rejects unknown sweep keys and bad perforation specs") {
  std::ofstream("/tmp/hdkit_bad.sweep") << "config A: wibble=1\n";
  write_blobs("/tmp/hdkit_train.csv", "/tmp/hdkit_test.csv");
  CmdResult r = run_cli("sweep /tmp/hdkit_train.csv /tmp/hdkit_test.csv "
                        "--sweep-file /tmp/hdkit_bad.sweep --dim 128");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("wibble") != std::string::npos);

  CmdResult p = run_cli("classify /tmp/hdkit_train.csv /tmp/hdkit_test.csv --dim 128 "
                        "--perforate nonsense");
  CHECK(p.exit_code == 1);
}
