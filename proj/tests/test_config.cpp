#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qsdlab/config.hpp"
#include "qsdlab/errors.hpp"
#include "qsdlab/runner.hpp"

using namespace qsdlab;
namespace fs = std::filesystem;

namespace {

const char* kHarmonic = R"(
[run]
seed = 9
[process]
family = kinetic-langevin
gamma = 1
[domain]
shape = interval
lo = -1
hi = 1
witness = 2
[estimator]
init_x = 0.5
n_traj = 200
dt = 1e-3
times = 0:1:0.25
)";

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.violations;
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& s) {
  for (const auto& m : v)
    if (m.find(s) != std::string::npos) return true;
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("canonical text round-trips") {
  const RunConfig c = parse_config(kHarmonic);
  const std::string t = canonical_text(c);
  CHECK(canonical_text(parse_config(t)) == t);
  CHECK(config_hash(c) == config_hash(parse_config(t)));
  CHECK(c.estimator.times.size() == 5);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("every violation is reported at once") {
  const auto v = violations_of(std::string(kHarmonic) + "bogus = 1\n[process2]\nx = 1\n");
  CHECK(v.size() >= 2);
  CHECK(mentions(v, "bogus"));
  CHECK(mentions(v, "process2"));
}

TEST_CASE("cross-field conditions") {
  auto nh = violations_of(R"(
[process]
family = nose-hoover
gamma = 0
)");
  CHECK(mentions(nh, "gamma > 0"));
  auto d = violations_of(R"(
[process]
family = nose-hoover
gamma = 1
[lyapunov]
family = nose-hoover
delta = 1.5
)");
  CHECK(mentions(d, "delta"));
  auto w = violations_of(R"(
[domain]
shape = interval
lo = -1
hi = 1
)");
  CHECK(mentions(w, "witness"));
}

TEST_CASE("seed resolution order") {
  const RunConfig c = parse_config(kHarmonic);
  RunOptions o;
  unsetenv("QSD_LAB_SEED");
  CHECK(resolve_seed(c, o) == 9);
  setenv("QSD_LAB_SEED", "17", 1);
  CHECK(resolve_seed(c, o) == 17);
  o.seed = 23;
  CHECK(resolve_seed(c, o) == 23);
  setenv("QSD_LAB_SEED", "x", 1);
  o.seed.reset();
  CHECK_THROWS_AS(resolve_seed(c, o), UsageError);
  unsetenv("QSD_LAB_SEED");
}

TEST_CASE("runner outputs are identical across worker counts") {
  const RunConfig c = parse_config(kHarmonic);
  const fs::path base = fs::temp_directory_path() / "qsdlab_unit_runner";
  fs::remove_all(base);
  RunOptions o1, o4;
  o1.workers = 1;
  o1.out_dir = (base / "w1").string();
  o4.workers = 4;
  o4.out_dir = (base / "w4").string();
  const RunResult r1 = run_scenario(c, "survival", o1);
  const RunResult r4 = run_scenario(c, "survival", o4);
  CHECK(r1.exit_code == 0);
  REQUIRE(r1.files == r4.files);
  for (const auto& f : r1.files) CHECK_MESSAGE(slurp(base / "w1" / f) == slurp(base / "w4" / f), f);
  set_workers(0);
  fs::remove_all(base);
}

TEST_CASE("CLI exit codes") {
  const fs::path dir = fs::temp_directory_path() / "qsdlab_unit_cli";
  fs::create_directories(dir);
  std::string bad = kHarmonic;
  bad.replace(bad.find("n_traj = 200"), 12, "n_traj = 0");
  std::ofstream(dir / "bad.ini") << bad;
  const std::string cfg = (dir / "bad.ini").string();
  const std::string out = (dir / "out").string();
  std::vector<std::string> args{"qsd-lab", "survival", "--config", cfg, "--out", out};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  CHECK(run_cli(static_cast<int>(argv.size()), argv.data()) == 2);
  std::vector<std::string> args2{"qsd-lab", "survival"};
  std::vector<char*> argv2;
  for (auto& a : args2) argv2.push_back(a.data());
  CHECK(run_cli(static_cast<int>(argv2.size()), argv2.data()) == 2);
  fs::remove_all(dir);
}
