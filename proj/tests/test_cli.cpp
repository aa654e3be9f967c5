#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("csdvs_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args, const fs::path& dir) {
  fs::path out = dir / "stdout.txt";
  std::string cmd = std::string(CSDVS_CLI) + " " + args + " > \"" + out.string() + "\" 2> \"" +
                    (dir / "stderr.txt").string() + "\"";
  int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("gen writes duration*fps frames deterministically") {
  fs::path d = scratch("gen");
  Result r = run("gen --kind flashing-spot --size 128 --fps 500 --duration 1.0 -q -o " + (d / "a").string(), d);
  CHECK(r.code == 0);
  CHECK(r.out == "500\n");
  std::size_t pgm = 0;
  for (const auto& e : fs::directory_iterator(d / "a"))
    if (e.path().extension() == ".pgm") ++pgm;
  CHECK(pgm == 500);
  CHECK(fs::exists(d / "a" / "timestamps.txt"));
  CHECK(fs::exists(d / "a" / "stimulus.txt"));

  run("gen --kind flashing-spot --size 128 --fps 500 --duration 1.0 -q -o " + (d / "b").string(), d);
  for (const char* f : {"frame_000000.pgm", "frame_000123.pgm", "frame_000499.pgm", "timestamps.txt"})
    CHECK(slurp(d / "a" / f) == slurp(d / "b" / f));
}

TEST_CASE("gen rejects aliasing flicker and bad flags") {
  fs::path d = scratch("alias");
  CHECK(run("gen --kind flicker --freq 300 --fps 500 -o " + (d / "f").string(), d).code == 2);
  CHECK(run("gen --kind flashing-spot --contrast 1.0 -o " + (d / "f").string(), d).code == 2);
  CHECK(run("gen --no-such-flag", d).code == 2);
  CHECK(run("", d).code == 2);
}

TEST_CASE("design prints the time constant and sweeps") {
  fs::path d = scratch("design");
  Result r = run("design --R 100e3 --C 1e-12 --L 10", d);
  CHECK(r.code == 0);
  CHECK(r.out.find("tau          1.000000e-05   s") != std::string::npos);
  Result s = run("design --sweep L=5:5:30 --R 10e3", d);
  CHECK(s.code == 0);
  CHECK(std::count(s.out.begin(), s.out.end(), '\n') == 7);  // header + 6 rows
  CHECK(run("design --sweep R=1:1:1000000 --sweep L=1:1:10", d).code == 2);
}

TEST_CASE("render on an empty event file gives uniform gray") {
  fs::path d = scratch("render");
  std::ofstream(d / "e.csv") << "t_us,x,y,p\n";
  Result r = run("render -e " + (d / "e.csv").string() + " --width 8 --height 6 --window-us 10000 -q -o " +
                     (d / "r").string(),
                 d);
  CHECK(r.code == 0);
  CHECK(r.out == "1\n");
  std::string img = slurp(d / "r" / "accum_000000.pgm");
  REQUIRE(img.size() >= 48);
  for (std::size_t i = img.size() - 48; i < img.size(); ++i) CHECK(static_cast<unsigned char>(img[i]) == 128);
}

TEST_CASE("simulate: static video, determinism, config merging, exit codes") {
  fs::path d = scratch("sim");
  // Static video: five copies of one frame.
  fs::create_directories(d / "still");
  for (int k = 0; k < 5; ++k) {
    std::ofstream f(d / "still" / ("f" + std::to_string(k) + ".pgm"), std::ios::binary);
    f << "P5\n4 4\n255\n";
    for (int i = 0; i < 16; ++i) f.put(static_cast<char>(i * 15));
  }
  Result st = run("simulate -i " + (d / "still").string() + " --mode dvs -q -o " + (d / "so").string(), d);
  CHECK(st.code == 0);
  CHECK(nlohmann::json::parse(st.out)["total"] == 0);

  run("gen --kind flashing-spot --size 48 --radius 8 --duration 0.2 -q -o " + (d / "spot").string(), d);
  std::ofstream(d / "cfg.txt") << "# experiment\nL=5\ntheta=0.25\nformat=bin\n";
  const std::string base = "simulate -c " + (d / "cfg.txt").string() + " -i " + (d / "spot").string() + " --theta 0.2";
  const char* files[] = {"dvs.bin", "csdvs.bin", "dvs_stats.json", "csdvs_stats.json", "comparison.json", "params.txt"};
  Result a = run(base + " -q -o " + (d / "o1").string(), d);
  REQUIRE(a.code == 0);
  std::vector<std::string> first;
  for (const char* f : files) first.push_back(slurp(d / "o1" / f));
  Result b = run(base + " -q -o " + (d / "o1").string(), d);
  CHECK(a.out == b.out);
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(slurp(d / "o1" / files[i]) == first[i]);
  auto cmp = nlohmann::json::parse(a.out);
  CHECK(cmp["per_region"].contains("edge_annulus"));
  std::string params = slurp(d / "o1" / "params.txt");
  CHECK(params.find("L=5\n") != std::string::npos);
  CHECK(params.find("theta=0.20000000000000001\n") != std::string::npos);
  CHECK(params.find("format=bin\n") != std::string::npos);

  // params.txt reproduces the run.
  Result c = run("simulate -c " + (d / "o1" / "params.txt").string() + " -q -o " + (d / "o3").string(), d);
  CHECK(c.code == 0);
  CHECK(slurp(d / "o3" / "csdvs.bin") == slurp(d / "o1" / "csdvs.bin"));

  // Compare subcommand reproduces the totals.
  Result cm = run("compare " + (d / "o1" / "dvs.bin").string() + " " + (d / "o1" / "csdvs.bin").string() +
                      " --stimulus " + (d / "spot" / "stimulus.txt").string() + " --L 5",
                  d);
  CHECK(cm.code == 0);
  auto j = nlohmann::json::parse(cm.out);
  CHECK(j["total_a"] == cmp["total_a"]);
  CHECK(j["total_b"] == cmp["total_b"]);

  CHECK(run("simulate -i " + (d / "missing").string() + " -o " + (d / "o4").string(), d).code == 3);
  CHECK(run("simulate -i " + (d / "spot").string() + " --theta -1 -o " + (d / "o4").string(), d).code == 2);
  CHECK(run("simulate -i " + (d / "spot").string() + " --solver-tol 1e-300 --mode csdvs -o " + (d / "o5").string(), d)
            .code == 4);
}
