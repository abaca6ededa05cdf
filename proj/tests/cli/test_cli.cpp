#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// stdout is captured, stderr goes to a side file
Run run(const std::string& args, std::string* err = nullptr) {
  const fs::path err_path = fs::temp_directory_path() / "modematch_cli_stderr.txt";
  const std::string cmd = std::string(MODEMATCH_CLI) + " " + args + " 2>" + err_path.string();
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (err) {
    std::ifstream in(err_path);
    std::stringstream ss;
    ss << in.rdbuf();
    *err = ss.str();
  }
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workdir {
  fs::path dir;
  Workdir() {
    dir = fs::temp_directory_path() / ("modematch_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

void write_normal(const std::string& path, int n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> null(0.2, 1.2), alt(3.0, 1.2);
  std::uniform_real_distribution<double> u;
  std::ofstream out(path);
  out.precision(17);
  out << "# z values\n";
  for (int i = 0; i < n; ++i) out << (u(g) < 0.9 ? null(g) : alt(g)) << "\n";
}

}  // namespace

TEST_CASE("help and version") {
  Run r = run("--help");
  CHECK(r.code == 0);
  CHECK(r.out.find("fit") != std::string::npos);
  CHECK(run("--version").code == 0);
}

TEST_CASE("fit then fdr through an artifact") {
  Workdir w;
  write_normal(w.path("z.txt"), 6000, 3);
  Run a = run("fit -i " + w.path("z.txt") + " --bootstrap 20 --seed 9 -o " + w.path("fit.json"));
  REQUIRE(a.code == 0);
  Run b = run("fit -i " + w.path("z.txt") + " --bootstrap 20 --seed 9 --threads 3");
  REQUIRE(b.code == 0);
  CHECK(b.out == slurp(w.path("fit.json")));

  Run f = run("fdr --fit " + w.path("fit.json") + " -i " + w.path("z.txt") + " --adjust-zeta");
  REQUIRE(f.code == 0);
  CHECK(f.out.rfind("t,", 0) == 0);
  CHECK(f.out.find("fdr_adjusted") != std::string::npos);

  // artifact re-read by wing
  Run wj = run("wing --fit " + w.path("fit.json") + " --format csv");
  CHECK(wj.code == 0);
  CHECK(wj.out.rfind("t,wing_1,wing_2", 0) == 0);
}

TEST_CASE("fdr rejects statistics that differ from the fit input") {
  Workdir w;
  write_normal(w.path("z.txt"), 3000, 4);
  write_normal(w.path("other.txt"), 3000, 5);
  REQUIRE(run("fit -i " + w.path("z.txt") + " -o " + w.path("fit.json")).code == 0);
  std::string err;
  Run r = run("fdr --fit " + w.path("fit.json") + " -i " + w.path("other.txt"), &err);
  CHECK(r.code == 2);
  CHECK(!err.empty());
}

TEST_CASE("exit codes") {
  Workdir w;
  write_normal(w.path("z.txt"), 3000, 6);
  std::string err;
  CHECK(run("fit --bogus", &err).code == 1);
  CHECK(!err.empty());
  CHECK(run("fit -i " + w.path("z.txt") + " --family weibull").code == 1);
  CHECK(run("fit -i " + w.path("missing.txt")).code == 2);
  std::ofstream(w.path("bad.txt")) << "1.0\nabc\n";
  CHECK(run("fit -i " + w.path("bad.txt"), &err).code == 2);
  CHECK(err.find("2") != std::string::npos);
  CHECK(run("fit -i " + w.path("z.txt") + " --bin-width 0.1 --fit-interval=-0.01,0.01").code == 3);
  CHECK(run("transform --from t:0 -i " + w.path("z.txt")).code == 1);
}

TEST_CASE("simulate is reproducible for a seed") {
  const std::string args = "simulate --scenario chisq --mode sweep-bin-width --grid 0.1,0.2 --n 2000 --reps 4 --seed 11";
  Run a = run(args + " --threads 1");
  Run b = run(args + " --threads 2");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  Run c = run("simulate --scenario chisq --mode sweep-bin-width --grid 0.1,0.2 --n 2000 --reps 4 --seed 12");
  CHECK(c.out != a.out);
}

TEST_CASE("bias and transform output") {
  Run b = run("bias --scenario chisq --p0 0.9");
  REQUIRE(b.code == 0);
  CHECK(b.out.rfind("parameter,theta_plus,theta_limit,bias_exact,bias_approx", 0) == 0);
  Workdir w;
  std::ofstream(w.path("t.txt")) << "0\n1.5\n-2\n";
  Run t = run("transform --from t:7 -i " + w.path("t.txt"));
  REQUIRE(t.code == 0);
  std::istringstream in(t.out);
  double a, b2, c;
  in >> a >> b2 >> c;
  CHECK(a == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b2 > 0.0);
  CHECK(b2 < 1.5);
  CHECK(c < -1.5);
}
