#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "rdbev_cli";

int run(const std::string& args) {
  const std::string cmd = std::string(RDBEV_CLI_PATH) + " " + args + " > " +
                          (kRoot / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dir(const std::string& name) { return (kRoot / name).string(); }

struct Fresh {
  Fresh() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
};

}  // namespace

TEST_CASE("generate is byte-identical for a fixed seed") {
  Fresh f;
  REQUIRE(run("generate --out " + dir("a") + " --frames 6 --seed 7") == 0);
  CHECK(slurp(kRoot / "last.log").find("config_digest ") == 0);
  REQUIRE(run("generate --out " + dir("b") + " --frames 6 --seed 7") == 0);
  for (const auto& e : fs::directory_iterator(dir("a")))
    CHECK(slurp(e.path()) == slurp(fs::path(dir("b")) / e.path().filename()));
  REQUIRE(run("generate --out " + dir("c") + " --frames 6 --seed 8") == 0);
  CHECK(slurp(fs::path(dir("a")) / "frame_000000.rdb") !=
        slurp(fs::path(dir("c")) / "frame_000000.rdb"));
}

TEST_CASE("generate options") {
  Fresh f;
  CHECK(run("generate --out " + dir("g04") + " --frames 2 --resolution 0.4") == 0);
  CHECK(slurp(kRoot / "last.log").find("grid 150x190") != std::string::npos);
  CHECK(run("generate --out " + dir("g0") + " --frames 0") == 0);
  CHECK(fs::exists(fs::path(dir("g0")) / "manifest.txt"));
  CHECK(run("generate --out " + dir("bad") + " --resolution 0.3") == 2);
  CHECK(run("generate --frames 2") == 2);
  std::ofstream(kRoot / "bad.cfg") << "nonsense = 1\n";
  CHECK(run("generate --config " + (kRoot / "bad.cfg").string() + " --out " + dir("x")) == 2);
}

TEST_CASE("baseline, ablate and evaluate") {
  Fresh f;
  REQUIRE(run("generate --out " + dir("ds") + " --frames 8 --seed 3") == 0);
  CHECK(run("baseline --dataset " + dir("ds") + " --method nope --out " + dir("p")) == 2);
  CHECK(run("baseline --dataset " + dir("missing") + " --method prior --out " + dir("p")) == 3);
  REQUIRE(run("baseline --dataset " + dir("ds") + " --method prior --out " + dir("prior")) == 0);
  REQUIRE(run("evaluate --dataset " + dir("ds") + " --predictions " + dir("prior") + " --out " +
              dir("rep")) == 0);
  CHECK(fs::exists(fs::path(dir("rep")) / "summary.txt"));
  REQUIRE(run("baseline --dataset " + dir("ds") + " --method beamform --chirp B --out " +
              dir("bf")) == 0);
  REQUIRE(run("ablate --dataset " + dir("ds") + " --transform collapse_range --out " +
              dir("cr")) == 0);
  CHECK(run("ablate --dataset " + dir("ds") + " --transform twist --out " + dir("t")) == 2);

  // Dropping a prediction file entry is a validation failure.
  std::string manifest = slurp(fs::path(dir("prior")) / "manifest.txt");
  manifest.erase(manifest.rfind("frame "));
  std::ofstream(fs::path(dir("prior")) / "manifest.txt", std::ios::trunc) << manifest;
  CHECK(run("evaluate --dataset " + dir("ds") + " --predictions " + dir("prior") + " --out " +
            dir("rep2")) != 0);

  // Corrupt frame files.
  for (const auto& e : fs::directory_iterator(dir("ds")))
    if (e.path().extension() == ".rdb") std::ofstream(e.path(), std::ios::trunc) << "garbage";
  CHECK(run("baseline --dataset " + dir("ds") + " --method range_energy --out " + dir("re")) == 3);
}
