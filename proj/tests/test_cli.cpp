#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  std::string cmd = std::string(CLI_BINARY) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  RunResult r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

const std::string kRef = std::string(GEOMETRY_DIR) + "/reference.json";
const std::string kGeo2 = std::string(GEOMETRY_DIR) + "/geometry2.json";

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Count branches with more than a handful of vertices from a slice CSV
// (single-vertex fragments flicker with resolution; real branches do not).
int nontrivial_branches(const std::string& csv, int min_vertices = 3) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  std::map<int, int> per_branch;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t p = 0;
    int col = 0;
    int branch = -1;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) {
      if (col == 4) branch = std::stoi(f);
      ++col;
    }
    (void)p;
    if (branch >= 0) ++per_branch[branch];
  }
  int n = 0;
  for (auto& [b, c] : per_branch)
    if (c > min_vertices) ++n;
  return n;
}

double wrap_deg(double d) {
  while (d > 180) d -= 360;
  while (d <= -180) d += 360;
  return d;
}

}  // namespace

TEST_CASE("slice command writes CSV and SVG") {
  auto r = run("-g " + kRef +
               " slice --rho1 17 --resolution 256 --out /tmp/cli_s17.csv "
               "--svg /tmp/cli_s17.svg");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("branches ", 0) == 0);
  auto csv = slurp("/tmp/cli_s17.csv");
  CHECK(csv.rfind("alpha_rad,theta1_rad,rho2,rho3,branch_id,residual", 0) ==
        0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') > 100);
  auto svg = slurp("/tmp/cli_s17.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  std::remove("/tmp/cli_s17.csv");
  std::remove("/tmp/cli_s17.svg");
}

TEST_CASE("slice rejects non-positive rho1") {
  auto r = run("-g " + kRef + " slice --rho1 0 --out /tmp/cli_bad.csv");
  CHECK(r.code == 2);
}

TEST_CASE("branch topology is stable across resolutions") {
  auto lo = run("-g " + kRef +
                " slice --rho1 17 --resolution 512 --out /tmp/cli_lo.csv");
  auto hi = run("-g " + kRef +
                " slice --rho1 17 --resolution 2048 --out /tmp/cli_hi.csv");
  REQUIRE(lo.code == 0);
  REQUIRE(hi.code == 0);
  CHECK(nontrivial_branches(slurp("/tmp/cli_lo.csv")) ==
        nontrivial_branches(slurp("/tmp/cli_hi.csv")));
  std::remove("/tmp/cli_lo.csv");
  std::remove("/tmp/cli_hi.csv");
}

TEST_CASE("cusps command reproduces the six known points") {
  auto r = run("-g " + kRef +
               " cusps --rho1 14.98 --out /tmp/cli_cusps.json");
  REQUIRE(r.code == 0);
  CHECK(r.out.substr(0, 1) == "6");
  auto j = json::parse(slurp("/tmp/cli_cusps.json"));
  // Known slice coordinates (degrees) and induced rod lengths.
  const double rows[6][4] = {
      {-122.89676, 114.05034, 31.276126, 16.178450},
      {-2.59985, 177.32847, 13.851460, 6.260100},
      {-0.59856, 15.46809, 16.027671, 29.566714},
      {50.67856, -69.12938, 0.845282, 3.777916},
      {57.48141, 133.77365, 30.449131, 26.619161},
      {170.37695, -10.65216, 17.988547, 26.446183}};
  int verified = 0;
  std::vector<bool> hit(6, false);
  for (const auto& c : j["cusps"]) {
    if (!c["verified"].get<bool>()) continue;
    ++verified;
    double a = c["alpha_deg"].get<double>();
    double t = c["theta1_deg"].get<double>();
    double r2 = c["rho2"].get<double>(), r3 = c["rho3"].get<double>();
    for (int i = 0; i < 6; ++i)
      if (std::abs(wrap_deg(a - rows[i][0])) <= 0.1 &&
          std::abs(wrap_deg(t - rows[i][1])) <= 0.1 &&
          std::abs(r2 - rows[i][2]) <= 0.02 && std::abs(r3 - rows[i][3]) <= 0.02)
        hit[static_cast<size_t>(i)] = true;
  }
  CHECK(verified == 6);
  for (bool h : hit) CHECK(h);
  std::remove("/tmp/cli_cusps.json");
}

TEST_CASE("cusps at tiny rho1 reports zero") {
  auto r = run("-g " + kRef +
               " cusps --rho1 0.05 --out /tmp/cli_cusps0.json");
  REQUIRE(r.code == 0);
  CHECK(r.out.substr(0, 1) == "0");
  std::remove("/tmp/cli_cusps0.json");
}

TEST_CASE("numeric and algebraic cusp modes agree") {
  auto a = run("-g " + kRef +
               " cusps --rho1 17 --mode algebraic --out /tmp/cli_ca.json");
  auto n = run("-g " + kRef +
               " cusps --rho1 17 --mode numeric --out /tmp/cli_cn.json");
  REQUIRE(a.code == 0);
  REQUIRE(n.code == 0);
  CHECK(a.out.substr(0, a.out.find('\n')) == n.out.substr(0, n.out.find('\n')));
  auto ja = json::parse(slurp("/tmp/cli_ca.json"));
  auto jn = json::parse(slurp("/tmp/cli_cn.json"));
  for (const auto& ca : ja["cusps"]) {
    if (!ca["verified"].get<bool>()) continue;
    bool found = false;
    for (const auto& cn : jn["cusps"]) {
      if (!cn["verified"].get<bool>()) continue;
      if (std::abs(wrap_deg(ca["alpha_deg"].get<double>() -
                            cn["alpha_deg"].get<double>())) < 1e-4 * 180 / M_PI &&
          std::abs(wrap_deg(ca["theta1_deg"].get<double>() -
                            cn["theta1_deg"].get<double>())) <
              1e-4 * 180 / M_PI)
        found = true;
    }
    CHECK(found);
  }
  std::remove("/tmp/cli_ca.json");
  std::remove("/tmp/cli_cn.json");
}

TEST_CASE("dk reports the cusp triple and empty sets cleanly") {
  auto r = run("-g " + kRef + " dk --lengths 14.98 13.851460 6.260100");
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  size_t largest = 0;
  for (const auto& c : j["clusters"]) largest = std::max(largest, c.size());
  CHECK(largest >= 3);

  auto e = run("-g " + kRef + " dk --lengths 5 200 10");
  REQUIRE(e.code == 0);
  auto je = json::parse(e.out);
  CHECK(je["poses"].empty());

  auto bad = run("-g " + kRef + " dk --lengths 5 -1 10");
  CHECK(bad.code == 2);
}

TEST_CASE("ik then dk recovers the pose") {
  auto r = run("-g " + kRef + " ik --pose 7.1 4.3 25");
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  std::ostringstream cmd;
  cmd.precision(17);
  cmd << "-g " << kRef << " dk --lengths " << j["L"][0].get<double>() << " "
      << j["L"][1].get<double>() << " " << j["L"][2].get<double>();
  auto d = run(cmd.str());
  REQUIRE(d.code == 0);
  auto jd = json::parse(d.out);
  bool found = false;
  for (const auto& p : jd["poses"]) {
    if (std::abs(p["b1"][0].get<double>() - 7.1) < 1e-6 &&
        std::abs(p["b1"][1].get<double>() - 4.3) < 1e-6 &&
        std::abs(wrap_deg(p["alpha_deg"].get<double>() - 25)) < 1e-6)
      found = true;
  }
  CHECK(found);
}

TEST_CASE("regions maps show the expected cell counts") {
  auto r17 = run("-g " + kRef +
                 " regions --rho1 17 --grid 48 --out /tmp/cli_r17.csv");
  REQUIRE(r17.code == 0);
  CHECK(r17.out.rfind("cells ", 0) == 0);
  auto csv = slurp("/tmp/cli_r17.csv");
  CHECK(csv.rfind("rho2,rho3,count", 0) == 0);
  CHECK(csv.find(",6\n") != std::string::npos);

  auto r31 = run("-g " + kRef +
                 " regions --rho1 31 --grid 48 --out /tmp/cli_r31.csv");
  REQUIRE(r31.code == 0);
  CHECK(slurp("/tmp/cli_r31.csv").find(",6\n") == std::string::npos);

  // All-void window far beyond reach.
  auto rfar = run("-g " + kRef +
                  " regions --rho1 17 --grid 6 --bounds 2000 2000 "
                  "--out /tmp/cli_rfar.csv");
  REQUIRE(rfar.code == 0);
  std::istringstream in(slurp("/tmp/cli_rfar.csv"));
  std::string line;
  std::getline(in, line);
  int nonzero = 0, rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    auto last = line.rfind(',');
    int c = std::stoi(line.substr(last + 1));
    // Centers of the lowest-left cells stay reachable only for small bounds;
    // at 2000 the first cell center is already past every rod's reach.
    if (c > 0) ++nonzero;
  }
  CHECK(rows == 36);
  CHECK(nonzero == 0);
  std::remove("/tmp/cli_r17.csv");
  std::remove("/tmp/cli_r31.csv");
  std::remove("/tmp/cli_rfar.csv");
}

TEST_CASE("surface sweep reports the stabilization threshold") {
  auto r = run("-g " + kGeo2 +
               " surface --rho1-range 1 20 --steps 12 --out /tmp/cli_g2.obj");
  REQUIRE(r.code == 0);
  REQUIRE(r.out.rfind("stabilization_threshold ", 0) == 0);
  double thr = std::stod(r.out.substr(r.out.find(' ') + 1));
  CHECK(thr >= 0);
  CHECK(thr <= 5.0 + 19.0 / 11.0 + 1e-9);
  auto csv = slurp("/tmp/cli_g2.obj.csv");
  CHECK(csv.rfind("rho1,cusp_count,branch_count,vertex_count", 0) == 0);
  auto mesh = slurp("/tmp/cli_g2.obj");
  CHECK(mesh.find("\nl ") != std::string::npos);
  std::remove("/tmp/cli_g2.obj");
  std::remove("/tmp/cli_g2.obj.csv");
}

TEST_CASE("outputs are byte-identical across repeated runs") {
  auto a = run("-g " + kRef +
               " cusps --rho1 14.98 --out /tmp/cli_det_a.json");
  auto b = run("-g " + kRef +
               " cusps --rho1 14.98 --out /tmp/cli_det_b.json");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out == b.out);
  CHECK(slurp("/tmp/cli_det_a.json") == slurp("/tmp/cli_det_b.json"));
  std::remove("/tmp/cli_det_a.json");
  std::remove("/tmp/cli_det_b.json");

  auto s1 = run("-g " + kRef +
                " slice --rho1 17 --resolution 128 --out /tmp/cli_det1.csv");
  auto s2 = run("-g " + kRef +
                " slice --rho1 17 --resolution 128 --out /tmp/cli_det2.csv");
  REQUIRE(s1.code == 0);
  REQUIRE(s2.code == 0);
  CHECK(slurp("/tmp/cli_det1.csv") == slurp("/tmp/cli_det2.csv"));
  std::remove("/tmp/cli_det1.csv");
  std::remove("/tmp/cli_det2.csv");
}

TEST_CASE("bad geometry path exits with the input error code") {
  auto r = run("-g /tmp/does_not_exist_geometry.json dk --lengths 1 1 1");
  CHECK(r.code == 2);
}
