#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ppk/config.hpp"
#include "ppk/errors.hpp"
#include "ppk/io.hpp"
#include "ppk/procsim.hpp"
#include "ppk/run.hpp"

using namespace ppk;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ppk_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int invoke(std::vector<std::string> args, std::string* log = nullptr) {
  args.insert(args.begin(), "ppkrige");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  if (log) *log = out.str() + err.str();
  return code;
}

void write_pattern(const fs::path& p, const PointPattern& pattern) {
  std::ostringstream os;
  os << "x,y\n";
  for (const Point& q : pattern.points) os << format_double(q.x) << ',' << format_double(q.y) << '\n';
  put(p, os.str());
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("config parsing") {
  const fs::path dir = scratch("parse");
  put(dir / "points.csv", "x,y\n0.1,0.2\n");

  SUBCASE("minimal krige config gets defaults") {
    const RunConfig c = parse_config_text(
        "[window]\nouter = 0 0 1 1\n[input]\npattern = points.csv\n[run]\ncell_side = 0.1\n", "min.ini", dir);
    CHECK(c.subcommand == Subcommand::Krige);
    REQUIRE(c.input);
    CHECK(*c.input == dir / "points.csv");
    CHECK(*c.cell_side == 0.1);
    CHECK_FALSE(c.cell_side_auto);
    CHECK(c.approx == Approx::MidpointPCF);
    CHECK(c.model == ModelChoice::PlugIn);
    CHECK(c.seed == 1);
    CHECK(c.replicates == 1);
    CHECK_FALSE(c.process);
    CHECK_FALSE(c.clamp_negative);
  }
  SUBCASE("process and input together are rejected naming both keys") {
    try {
      parse_config_text(
          "[window]\nouter = 0 0 1 1\n[process]\ntype = poisson\n[input]\npattern = points.csv\n", "both.ini", dir);
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
      const std::string what = e.what();
      CHECK(what.find("process.type") != std::string::npos);
      CHECK(what.find("input.pattern") != std::string::npos);
    }
  }
  SUBCASE("auto cell side") {
    const RunConfig c = parse_config_text(
        "[window]\nouter = 0 0 1 1\n[input]\npattern = points.csv\n[run]\ncell_side = auto\n", "auto.ini", dir);
    CHECK(c.cell_side_auto);
  }
  SUBCASE("unknown key names its line") {
    try {
      parse_config_text("[window]\nouter = 0 0 1 1\ncolour = red\n", "bad.ini", dir);
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("bad.ini:3") != std::string::npos);
      CHECK(std::string(e.what()).find("colour") != std::string::npos);
    }
  }
  SUBCASE("missing input file") {
    CHECK_THROWS_AS(parse_config_text("[window]\nouter = 0 0 1 1\n[input]\npattern = none.csv\n[run]\ncell_side = 0.1\n",
                                      "missing.ini", dir),
                    Error);
  }
  SUBCASE("flags override the file") {
    FlagOverrides f;
    f.seed = 99;
    f.cell_side = "0.25";
    f.approx = "fine";
    f.clamp_negative = true;
    const RunConfig c = parse_config_text(
        "[window]\nouter = 0 0 1 1\nhole = 0.4 0.4 0.6 0.6\n[input]\npattern = points.csv\n"
        "[run]\nseed = 3\ncell_side = 0.1\n",
        "flags.ini", dir, f);
    CHECK(c.seed == 99);
    CHECK(*c.cell_side == 0.25);
    CHECK(c.approx == Approx::FineGridIntegral);
    CHECK(c.clamp_negative);
    CHECK(c.window->holes().size() == 1);
  }
}

TEST_CASE("simulate is reproducible") {
  const fs::path dir = scratch("simulate");
  put(dir / "sim.ini",
      "[run]\nsubcommand = simulate\nseed = 7\nreplicates = 3\n[window]\nouter = 0 0 1 1\n"
      "[process]\ntype = poisson\nlambda = 100\n");
  std::vector<std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path out = dir / ("out" + std::to_string(pass));
    REQUIRE(invoke({"--config", (dir / "sim.ini").string(), "--out-dir", out.string()}) == 0);
    for (int k = 0; k < 3; ++k) {
      const fs::path f = out / ("pattern_00" + std::to_string(k) + ".csv");
      REQUIRE(fs::exists(f));
      if (pass == 0) {
        first.push_back(slurp(f));
      } else {
        CHECK(slurp(f) == first[static_cast<std::size_t>(k)]);
      }
    }
    CHECK_FALSE(fs::exists(out / "pattern_003.csv"));
    CHECK(fs::exists(out / "manifest.txt"));
  }
  CHECK(first[0] != first[1]);
}

TEST_CASE("krige on a pattern with a hole") {
  const fs::path dir = scratch("krige");
  const Window w(Rect{0.0, 0.0, 1.0, 1.0}, {{0.4, 0.4, 0.7, 0.7}});
  write_pattern(dir / "thomas.csv", simulate({ThomasSpec{25.0, 4.0, 0.02}}, w, 5));
  put(dir / "krige.ini",
      "[window]\nouter = 0 0 1 1\nhole = 0.4 0.4 0.7 0.7\n[input]\npattern = thomas.csv\n[run]\ncell_side = 0.1\n");
  const fs::path out = dir / "out";
  REQUIRE(invoke({"krige", "--config", (dir / "krige.ini").string(), "--out-dir", out.string(), "--dump-matrices"}) == 0);

  std::istringstream surface(slurp(out / "surface.csv"));
  std::string line;
  std::getline(surface, line);
  CHECK(line == "cell_center_x,cell_center_y,mask,count_or_empty,lambda_hat,variance");
  int targets = 0, observed = 0;
  while (std::getline(surface, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    REQUIRE(f.size() == 6);
    if (f[2] == "target") {
      ++targets;
      CHECK(f[3].empty());
      CHECK_FALSE(f[4].empty());
      CHECK(std::stod(f[5]) > 0.0);
    } else {
      ++observed;
      CHECK_FALSE(f[3].empty());
    }
  }
  CHECK(targets == 9);
  CHECK(observed == 91);

  const std::string manifest = slurp(out / "manifest.txt");
  CHECK(manifest.find("status = ok") != std::string::npos);
  CHECK(manifest.find("variance_label = plug-in") != std::string::npos);
  CHECK(manifest.find("[warnings]") != std::string::npos);
  CHECK(count_lines(slurp(out / "C.csv")) == 92);
  CHECK(count_lines(slurp(out / "Co.csv")) == 92);
}

TEST_CASE("exit codes and manifests on failure") {
  const fs::path dir = scratch("fail");
  put(dir / "bad.ini", "[window]\nouter = 0 0 1 1\nshape = round\n");
  const fs::path out = dir / "out";
  std::string log;
  CHECK(invoke({"krige", "--config", (dir / "bad.ini").string(), "--out-dir", out.string()}, &log) == 1);
  CHECK(log.find("bad.ini:3") != std::string::npos);
  const std::string manifest = slurp(out / "manifest.txt");
  CHECK(manifest.find("status = failed") != std::string::npos);
  CHECK(manifest.find("exit_code = 1") != std::string::npos);

  CHECK(invoke({"no-such-subcommand", "--out-dir", out.string()}) == 1);
  CHECK(invoke({"krige", "--config", (dir / "missing.ini").string(), "--out-dir", out.string()}) == 1);

  // A cell larger than the window is a mesh error, reported as a usage failure.
  put(dir / "big.ini", "[window]\nouter = 0 0 1 1\n[process]\ntype = poisson\n[run]\ncell_side = 2\n");
  CHECK(invoke({"krige", "--config", (dir / "big.ini").string(), "--out-dir", out.string()}) != 0);
}

TEST_CASE("validate subset through the installed tool") {
  const fs::path dir = scratch("validate");
  put(dir / "v.ini", "[run]\nsubcommand = validate\n[validate]\ncriteria = 1,7\n");
  const fs::path out = dir / "out";
  const std::string cmd = std::string("\"") + PPK_TOOL_PATH + "\" --config \"" + (dir / "v.ini").string() +
                          "\" --out-dir \"" + out.string() + "\" > \"" + (dir / "log.txt").string() + "\" 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  const std::string table = slurp(out / "validation.csv");
  CHECK(count_lines(table) == 3);
  CHECK(table.find("1,") != std::string::npos);
  CHECK(table.find(",pass,") != std::string::npos);
  CHECK(table.find(",fail,") == std::string::npos);
  CHECK(slurp(dir / "log.txt").find("PASS") != std::string::npos);
}
