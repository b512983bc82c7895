#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(CEMUX_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  Result r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

using Table = std::vector<std::vector<std::string>>;

// Data rows after the header, '#' lines skipped.
Table rows(const std::string& text, std::string* header = nullptr) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      seen_header = true;
      if (header) *header = line;
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    t.push_back(cells);
  }
  return t;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto p = std::filesystem::temp_directory_path() / ("cemux_test_" + name);
  std::ofstream(p) << content;
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors", "[cli]") {
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("sweep-m -d nosuchdesign -R 1").code == 1);
  CHECK(run("sweep-m -d cemux:turbo -R 1").code == 1);
  CHECK(run("quantize --values 1 -m 0").code == 1);
  CHECK(run("--help").code == 0);
  const auto help = run("decompose --help");
  CHECK(help.code == 0);
  CHECK(help.out.find("eps_noise,eps_samp,eps_corr") != std::string::npos);
}

TEST_CASE("quantize", "[cli]") {
  const auto r = run("quantize --values 0.5,0.375,0.125 -m 3");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("# cemux quantize --values 0.5,0.375,0.125 -m 3\n# seed 1\n", 0) == 0);
  std::string header;
  const auto t = rows(r.out, &header);
  CHECK(header == "index,weight,numerator,denominator,quantized");
  REQUIRE(t.size() == 3);
  CHECK(t[0][2] + "/" + t[0][3] == "4/8");
  CHECK(t[1][2] + "/" + t[1][3] == "3/8");
  CHECK(t[2][2] + "/" + t[2][3] == "1/8");

  const auto one = rows(run("quantize --values -0.7 -m 5").out);
  REQUIRE(one.size() == 1);
  CHECK(one[0][2] == "32");
  CHECK(one[0][3] == "32");
  CHECK(one[0][4] == "-1");

  const auto zeros = temp_file("zeros.txt", "0\n0\n# nothing\n0\n");
  const auto z = run("quantize --weights " + zeros.string());
  CHECK(z.code == 2);
  CHECK(z.out.find("zero weight mass") != std::string::npos);
  const auto junk = temp_file("junk.txt", "0.5\nabc\n");
  CHECK(run("quantize --weights " + junk.string()).code == 2);
}

TEST_CASE("sweeps", "[cli]") {
  const auto single = run("--seed 9 sweep-m -d cemux basic_hardwired -n 6 -M 8,16 -R 1");
  REQUIRE(single.code == 0);
  const auto t = rows(single.out);
  REQUIRE(t.size() == 4);
  for (const auto& row : t) {
    CHECK(row[3] == "1");
    CHECK(std::stod(row[4]) == std::abs(std::stod(row[5])));
    CHECK(std::stod(row[6]) == 0.0);
  }

  const auto by_n = run("sweep-n -d cemux basic_hardwired apc -n 8,5,6,7 -M 150 -R 100");
  REQUIRE(by_n.code == 0);
  const auto s = rows(by_n.out);
  REQUIRE(s.size() == 12);
  for (std::size_t i = 1; i < s.size(); ++i) {
    const bool ordered = s[i - 1][0] < s[i][0] || (s[i - 1][0] == s[i][0] && std::stoi(s[i - 1][2]) < std::stoi(s[i][2]));
    CHECK(ordered);
  }
  double last = 1.0;
  for (const auto& row : s) {
    if (row[0] != "cemux") continue;
    CHECK(std::stod(row[4]) < last);
    last = std::stod(row[4]);
  }

  const auto norm = rows(run("sweep-m -d cemux -n 6 -M 8 -R 20 --normalize").out);
  const auto raw = rows(run("sweep-m -d cemux -n 6 -M 8 -R 20").out);
  CHECK(std::stod(norm[0][4]) == Catch::Approx(std::stod(raw[0][4]) * 8.0));
  std::string header;
  rows(run("sweep-m -d cemux -n 6 -M 8 -R 2 --normalize").out, &header);
  CHECK(header == "design,M,N,R,rmse_normalized,bias,variance");
}

TEST_CASE("decompose", "[cli]") {
  const auto r = run("decompose --model hypergeometric --sampling precise --scc +1 -M 2,8,32 -N 64 -R 200");
  REQUIRE(r.code == 0);
  const auto t = rows(r.out);
  REQUIRE(t.size() == 3);
  for (const auto& row : t) CHECK(std::stod(row[4]) == 0.0);

  const auto noisy = rows(run("decompose --model hypergeometric --sampling noisy --scc 0 -M 4 -N 64 -R 4000").out);
  REQUIRE(noisy.size() == 1);
  const double total = std::stod(noisy[0][6]);
  const double closed = std::stod(noisy[0][9]);
  CHECK(total == Catch::Approx(closed).epsilon(0.1));
  CHECK(std::stod(noisy[0][4]) > 0.0);

  const auto any = rows(run("decompose --model bernoulli --scc any -M 3 -N 32 -R 50").out);
  REQUIRE(any.size() == 1);
  CHECK_FALSE(any[0].back().empty());
  const auto missing = run("decompose --model hypergeometric --scc any -M 3 -N 32 -R 50");
  CHECK(missing.code == 2);
  CHECK(missing.out.find("SCC") != std::string::npos);
  CHECK(run("decompose -M 3 -N 48 -R 50").code == 2);
}

TEST_CASE("filter", "[cli]") {
  const auto a = std::filesystem::temp_directory_path() / "cemux_test_filter_a.csv";
  const std::string args = "--seed 4 filter --length 120 --taps 15 -n 7 -d cemux basic_biased --repeats 2 -o ";
  REQUIRE(run(args + a.string()).code == 0);
  const auto text = slurp(a);
  REQUIRE(run(args + a.string()).code == 0);
  CHECK(text == slurp(a));
  std::string header;
  const auto t = rows(text, &header);
  CHECK(header == "index,warmup,noisy,reference,cemux,basic_biased");
  CHECK(t.size() == 120);
  CHECK(t[13][1] == "1");
  CHECK(t[14][1] == "0");
  CHECK(text.find("# stats,cemux,") != std::string::npos);
  CHECK(text.find("# full_scale -1,1") != std::string::npos);

  // Identity coefficients pass the (quantized) input through.
  const auto ident = temp_file("ident.txt", "1\n");
  const auto id = rows(run("filter --length 50 --coeffs " + ident.string() + " -n 8 -d cemux").out);
  REQUIRE(id.size() == 50);
  for (const auto& row : id) CHECK(std::abs(std::stod(row[4]) - std::stod(row[2])) <= std::ldexp(1.0, -7));

  const auto sig = temp_file("signal.csv", "index,value\n0,1.0\n1,3.0\n2,2.0\n3,0.5\n");
  const auto ok = run("filter --signal " + sig.string() + " --full-scale 0,4 --taps 3 -n 5 -d cemux");
  CHECK(ok.code == 0);
  CHECK(rows(ok.out).size() == 4);
  CHECK(ok.out.find("# full_scale 0,4") != std::string::npos);
  const auto out_of_range = run("filter --signal " + sig.string() + " --taps 3 -n 5 -d cemux");
  CHECK(out_of_range.code == 2);
  CHECK(out_of_range.out.find("full-scale") != std::string::npos);
}

TEST_CASE("report", "[cli]") {
  const auto r = run("report -d cemux cemux_wbg apc --values 0.4375,0.25,0.25,0.0625 -n 4");
  REQUIRE(r.code == 0);
  const auto t = rows(r.out);
  REQUIRE(t.size() == 3);
  CHECK(t[0][0] == "cemux");
  CHECK(t[0][3] == "5");   // muxes
  CHECK(t[0][4] == "4");   // comparators
  CHECK(t[0][8] == "1");   // sobol
  CHECK(t[0][11] == "1");  // select counter
  CHECK(t[1][5] == "4");   // wbgs
  CHECK(t[2][7] == "4");   // xnors
  CHECK(rows(run("report -d cemux --values 0.8 -n 6").out)[0][3] == "0");
}
