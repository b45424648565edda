#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

std::string binary() {
  const char* env = std::getenv("COORDC_BIN");
  REQUIRE(env != nullptr);
  return env;
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  std::string cmd = binary() + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  RunResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::size_t got = fread(buf.data(), 1, buf.size(), pipe)) res.output.append(buf.data(), got);
  int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("coordc_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("gen rang writes schema-valid files and reports divisibility errors") {
  TempDir dir;
  auto ok = run("gen rang --rho 1 --n 64 --seed 7 -o " + dir.file("g.json"));
  CHECK(ok.exit_code == 0);
  auto text = slurp(dir.file("g.json"));
  CHECK(text.find("\"schema\": \"matching-v1\"") != std::string::npos);
  CHECK(text.find("\"rho\": 1") != std::string::npos);

  auto bad = run("gen rang --rho 1 --n 10 -o " + dir.file("bad.json"));
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("16") != std::string::npos);

  CHECK(run("verify --kind rang --instance " + dir.file("g.json")).exit_code == 0);
}

TEST_CASE("gen stable produces instances the stable pipeline accepts") {
  TempDir dir;
  CHECK(run("gen stable --n 50 --k 5 --cap 10 --seed 3 -o " + dir.file("st.json")).exit_code == 0);
  auto res = run("stable-coordinate --instance " + dir.file("st.json") + " -o " +
                 dir.file("st.csv"));
  CHECK(res.exit_code == 0);
  // k * ceil(log2(n+2)) = 5 * 6.
  CHECK(slurp(dir.file("st.csv")).find(",30,") != std::string::npos);
  CHECK(run("verify --kind stable --instance " + dir.file("st.json")).exit_code == 0);
}

TEST_CASE("match-coordinate runs replay byte-identically") {
  TempDir dir;
  CHECK(run("gen planted --k 4 --b 5 --extra 2 --seed 2 -o " + dir.file("m.json")).exit_code == 0);
  std::string cmd = "match-coordinate --instance " + dir.file("m.json") +
                    " --eta 0.05 --eps 0.1 --seed 4 -o ";
  CHECK(run(cmd + dir.file("a.csv")).exit_code == 0);
  CHECK(run(cmd + dir.file("b.csv")).exit_code == 0);
  auto a = slurp(dir.file("a.csv"));
  CHECK(a == slurp(dir.file("b.csv")));
  CHECK(a.find("match,20,4,4,") != std::string::npos);

  CHECK(run("verify --kind matching --instance " + dir.file("m.json") +
            " --eta 0.05 --eps 0.1").exit_code == 0);
}

TEST_CASE("matching ratio stays within 1.25 once the optimum is large enough") {
  TempDir dir;
  // k = 2 needs OPT >= 64 * k * log^2(2k): n = 250 with supply 125 clears it.
  CHECK(run("gen planted --k 2 --b 125 --extra 2 --seed 6 -o " + dir.file("big.json"))
            .exit_code == 0);
  auto res = run("match-coordinate --instance " + dir.file("big.json") +
                 " --eta 0.01 --eps 0.1 --seed 1 --format json");
  CHECK(res.exit_code == 0);
  auto pos = res.output.find("\"ratio\": ");
  REQUIRE(pos != std::string::npos);
  double ratio = std::stod(res.output.substr(pos + 9));
  CHECK(ratio <= 1.25);
}

TEST_CASE("lifted instances coordinate well under the default parameters") {
  TempDir dir;
  CHECK(run("gen rang --rho 1 --n 64 --seed 7 -o " + dir.file("g.json")).exit_code == 0);
  CHECK(run("gen lift --input " + dir.file("g.json") + " --b 8 -o " + dir.file("l.json"))
            .exit_code == 0);
  auto res = run("match-coordinate --instance " + dir.file("l.json") +
                 " --seed 2 --format json");
  CHECK(res.exit_code == 0);
  auto pos = res.output.find("\"ratio\": ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(res.output.substr(pos + 9)) <= 1.25);
}

TEST_CASE("routing pipeline verifies and enforces preconditions") {
  TempDir dir;
  CHECK(run("gen routing --topology parallel --players 100 --edges 2 --lipschitz 0.01 "
            "--seed 1 -o " +
            dir.file("rg.json"))
            .exit_code == 0);
  auto res = run("routing-coordinate --instance " + dir.file("rg.json") +
                 " --alpha 0.3 --r 5 --format json");
  CHECK(res.exit_code == 0);
  auto pos = res.output.find("\"objective\": ");
  REQUIRE(pos != std::string::npos);
  // Regret stays within alpha + lambda m r + lambda m = 0.42.
  CHECK(std::stod(res.output.substr(pos + 13)) <= 0.42);
  CHECK(run("verify --kind routing --instance " + dir.file("rg.json") + " --alpha 0.3 --r 5")
            .exit_code == 0);

  auto bad = run("routing-coordinate --instance " + dir.file("rg.json") + " --alpha 0.05 --r 5");
  CHECK(bad.exit_code == 3);
  CHECK(bad.output.find("alpha must exceed") != std::string::npos);
}

TEST_CASE("verification failures exit with code 4") {
  TempDir dir;
  // A matching file is not a rang instance.
  CHECK(run("gen matching --n 8 --k 2 --seed 5 -o " + dir.file("m.json")).exit_code == 0);
  CHECK(run("verify --kind rang --instance " + dir.file("m.json")).exit_code == 2);

  // Corrupt a rang file so the welfare guarantee breaks while metadata parses.
  CHECK(run("gen rang --rho 1 --n 16 --seed 1 -o " + dir.file("g.json")).exit_code == 0);
  std::string text = slurp(dir.file("g.json"));
  auto pos = text.find("\"edges\"");
  REQUIRE(pos != std::string::npos);
  // Drop every edge: structure fails validation -> parameter error, not crash.
  std::string gutted = text;
  auto open = gutted.find('[', pos);
  auto close = gutted.find(']', open);
  gutted.replace(open, close - open + 1, "[]");
  {
    std::ofstream out(dir.file("gutted.json"));
    out << gutted;
  }
  auto res = run("verify --kind rang --instance " + dir.file("gutted.json"));
  CHECK(res.exit_code == 2);
}

TEST_CASE("expect-bits turns the broadcast-length invariant into an exit code") {
  TempDir dir;
  CHECK(run("gen stable --n 50 --k 5 --cap 10 --seed 3 -o " + dir.file("st.json")).exit_code == 0);
  // k * ceil(log2(n+2)) = 5 * 6 = 30 bits.
  CHECK(run("verify --kind stable --instance " + dir.file("st.json") + " --expect-bits 30")
            .exit_code == 0);
  auto res = run("verify --kind stable --instance " + dir.file("st.json") + " --expect-bits 31");
  CHECK(res.exit_code == 4);
  CHECK(res.output.find("expected 31") != std::string::npos);
}

TEST_CASE("sweep marks failing cells and keeps going") {
  TempDir dir;
  CHECK(run("gen routing --topology parallel --players 50 --edges 2 --lipschitz 0.01 "
            "--seed 1 -o " +
            dir.file("rg.json"))
            .exit_code == 0);
  // eps = 0.05 violates the target precondition (needs > 2*lambda*m = 0.04 and
  // a feasible alpha); eps = 0.8 succeeds.
  auto res = run("sweep --protocol routing --grid eps=0.05,0.8 --instance " +
                 dir.file("rg.json") + " -o " + dir.file("s.csv"));
  CHECK(res.exit_code == 0);
  auto text = slurp(dir.file("s.csv"));
  CHECK(text.find("failed:") != std::string::npos);
  CHECK(text.find(",ok") != std::string::npos);
}

TEST_CASE("sweep emits one row per grid point per seed and survives empty grids") {
  TempDir dir;
  auto res = run("sweep --protocol match --grid k=2,4 --n-per-k 8 --eta 0.1 --eps 0.1 "
                 "--seeds 2 -o " +
                 dir.file("s.csv"));
  CHECK(res.exit_code == 0);
  auto text = slurp(dir.file("s.csv"));
  CHECK(text.find("parameter,value,seed,n,k_or_m,message_bits,objective,status") == 0);
  int rows = 0;
  for (char c : text)
    if (c == '\n') ++rows;
  CHECK(rows >= 4);  // 2 grid points x 2 seeds

  auto empty = run("sweep --protocol match --grid k= -o " + dir.file("e.csv"));
  CHECK(empty.exit_code == 0);
  CHECK(slurp(dir.file("e.csv")) ==
        "parameter,value,seed,n,k_or_m,message_bits,objective,status\n");
}

TEST_CASE("private-coordinate consumes generated candidate spaces") {
  TempDir dir;
  CHECK(run("gen matching --n 6 --k 2 --max-supply 2 --edge-prob 0.6 --seed 9 -o " +
            dir.file("m.json"))
            .exit_code == 0);
  CHECK(run("gen candidates --instance " + dir.file("m.json") +
            " --eta 0.2 --eps 0.5 --levels 4 -o " + dir.file("c.json"))
            .exit_code == 0);
  auto res = run("private-coordinate --instance " + dir.file("m.json") + " --candidates " +
                 dir.file("c.json") + " --privacy-eps 2 --seed 11 --format json");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("\"protocol\": \"private\"") != std::string::npos);
}

TEST_CASE("unknown flags are parameter errors") {
  CHECK(run("match-coordinate --no-such-flag 1").exit_code == 2);
  CHECK(run("gen rang --rho 1").exit_code == 2);  // missing required options
}
