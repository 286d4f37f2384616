#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "rdbev/pipeline.hpp"
#include "rdbev/supervision.hpp"

using namespace rdbev;
namespace fs = std::filesystem;

namespace {

fs::path fresh(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("rdbev_pipe_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GeneratorConfig small(std::uint64_t frames, std::uint64_t seed = 7) {
  GeneratorConfig c;
  c.frames = frames;
  c.seed = seed;
  c.frames_per_sequence = 3;
  return c;
}

// Writes one prediction per val frame with the frame's own occupancy as scores.
void write_oracle_predictions(const fs::path& ds_dir, const fs::path& out) {
  const DatasetInfo ds = open_dataset(ds_dir);
  fs::create_directories(out);
  Manifest m;
  m.kind = "predictions";
  m.meta["method"] = "labels";
  for (const auto& e : ds.manifest.split(Split::Val)) {
    const FrameRecord r = read_frame(ds_dir / e.file);
    PredictionMap p(r.grid());
    for (std::size_t i = 0; i < p.values().size(); ++i)
      p.values()[i] = r.label.occupancy[i] ? 1.0F : 0.0F;
    write_prediction({r.frame_id, r.sequence_id, "labels", p}, out / e.file);
    m.entries.push_back({e.frame_id, e.sequence_id, Split::Val, e.file});
  }
  write_manifest(m, out);
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = GeneratorConfig::parse("# x\nseed = 9\nresolution = 0.4 # inline\nnoise = false\n");
  CHECK(c.seed == 9);
  CHECK(c.grid().rows() == 150);
  CHECK(!c.noise);
  CHECK(GeneratorConfig::parse(c.serialize()).serialize() == c.serialize());
  CHECK_THROWS_AS(GeneratorConfig::parse("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(GeneratorConfig::parse("seed = x\n"), ConfigError);
  CHECK_THROWS_AS(GeneratorConfig::parse("split_ratio = 1.5\n"), ConfigError);
  CHECK(GeneratorConfig{}.digest() != c.digest());
}

TEST_CASE("derived seeds") {
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 3; ++b) seen.insert(derive_seed(7, a, b));
  CHECK(seen.size() == 150);
}

TEST_CASE("frames are deterministic and self-consistent") {
  const GeneratorConfig cfg = small(6);
  const FrameRecord a = make_frame(cfg, 4);
  const FrameRecord b = make_frame(cfg, 4);
  CHECK(a == b);
  a.validate();
  CHECK(a.sequence_id == 4 / cfg.frames_per_sequence);
  CHECK(a.rd.all_finite());
  CHECK(a.label.occupancy.count() > 0);
  CHECK(!(make_frame(cfg, 5).rd == a.rd));
}

TEST_CASE("worker count") {
  CHECK(worker_count() >= 1);
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("generation is byte-identical across runs and worker counts") {
  const fs::path a = fresh("gen_a"), b = fresh("gen_b");
  generate_dataset(small(8), a, 1);
  generate_dataset(small(8), b, 3);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    CHECK_MESSAGE(slurp(e.path()) == slurp(b / e.path().filename()), e.path().filename().string());
  }
  CHECK(files == 10);  // 8 frames, manifest, generator.cfg
}

TEST_CASE("generation writes the requested grid") {
  GeneratorConfig c = small(4);
  c.resolution = 0.4;
  const fs::path d = fresh("gen_04");
  generate_dataset(c, d, 1);
  const DatasetInfo ds = open_dataset(d);
  CHECK(ds.grid.rows() == 150);
  CHECK(ds.grid.cols() == 190);
  const FrameRecord r = read_frame(d / ds.manifest.entries[0].file);
  CHECK(r.label.occupancy.size() == 150u * 190u);
}

TEST_CASE("zero frames gives an empty manifest") {
  const fs::path d = fresh("gen_0");
  const Manifest m = generate_dataset(small(0), d, 1);
  CHECK(m.entries.empty());
  CHECK(read_manifest(d).entries.empty());
  CHECK_THROWS_AS(generate_dataset(small(1), fresh("gen_1"), 1), ConfigError);
}

TEST_CASE("splits keep sequences whole") {
  const fs::path d = fresh("gen_split");
  const Manifest m = generate_dataset(small(12), d, 1);
  std::map<std::uint64_t, std::set<int>> split_of;
  for (const auto& e : m.entries) split_of[e.sequence_id].insert(static_cast<int>(e.split));
  for (const auto& [seq, s] : split_of) CHECK(s.size() == 1);
  CHECK(!m.split(Split::Train).empty());
  CHECK(!m.split(Split::Val).empty());
}

TEST_CASE("baselines, ablation and evaluation end to end") {
  const fs::path d = fresh("e2e");
  generate_dataset(small(12), d, 1);
  const DatasetInfo ds = open_dataset(d);

  SUBCASE("prior") {
    const fs::path pd = fresh("e2e_prior");
    const Manifest pm = run_baseline(d, BaselineMethod::Prior, pd, 1);
    const EvalReport r = run_evaluation(d, pd);
    CHECK(std::abs(r.ap - r.pos_frac) <= 1e-12);
    // Every map holds the train prevalence.
    std::vector<FrameRecord> train;
    for (const auto& e : ds.manifest.split(Split::Train)) train.push_back(read_frame(d / e.file));
    std::vector<const FrameRecord*> ptrs;
    for (const auto& t : train) ptrs.push_back(&t);
    const double pf = estimate_pos_frac(ptrs);
    const PredictionRecord p = read_prediction(pd / pm.entries[0].file);
    CHECK(p.map[0] == static_cast<float>(pf));
    CHECK(r.method == "prior");
    CHECK(r.bands.size() == 5);
  }
  SUBCASE("perfect predictions") {
    const fs::path pd = fresh("e2e_labels");
    write_oracle_predictions(d, pd);
    const EvalReport r = run_evaluation(d, pd);
    CHECK(r.ap == 1.0);
    CHECK(r.iou_occupied == 1.0);
    CHECK(r.uhr == 0.0);
    CHECK(r.tau == 1.0);
  }
  SUBCASE("report files") {
    const fs::path pd = fresh("e2e_re");
    run_baseline(d, BaselineMethod::RangeEnergy, pd, 2);
    const EvalReport r = run_evaluation(d, pd);
    const fs::path out = fresh("e2e_report");
    fs::create_directories(out);
    write_report(r, out);
    CHECK(fs::exists(out / "report.txt"));
    CHECK(fs::exists(out / "summary.txt"));
    CHECK(fs::exists(out / "pr_range_0_20.csv"));
    CHECK(slurp(out / "pr_range_0_20.csv").rfind("threshold,precision,recall\n", 0) == 0);
    CHECK(slurp(out / "summary.txt").find("ap=") != std::string::npos);
  }
  SUBCASE("missing and extra predictions are named") {
    const fs::path p = fresh("e2e_mismatch");
    run_baseline(d, BaselineMethod::Prior, p, 1);
    Manifest m = read_manifest(p);
    const std::uint64_t dropped = m.entries.back().frame_id;
    m.entries.pop_back();
    m.entries.push_back({9999, 0, Split::Val, "x.rdb"});
    write_manifest(m, p);
    try {
      run_evaluation(d, p);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find(std::to_string(dropped)) != std::string::npos);
      CHECK(msg.find("9999") != std::string::npos);
    }
  }
  SUBCASE("ablation") {
    const fs::path a = fresh("e2e_abl");
    run_ablation(d, AblationTransform::AOnly, a, 1);
    const Manifest m = read_manifest(a);
    CHECK(m.meta.at("ablation") == "a_only");
    const FrameRecord orig = read_frame(d / m.entries[0].file);
    const FrameRecord abl = read_frame(a / m.entries[0].file);
    CHECK(abl.label == orig.label);
    CHECK(abl.rd == select_chirps(orig.rd, ChirpSelection::AOnly));
    CHECK_THROWS_AS(run_ablation(d, AblationTransform::AOnly, d, 1), ConfigError);
  }
  SUBCASE("unknown names") {
    CHECK_THROWS_AS(parse_baseline_method("cnn"), ConfigError);
    CHECK_THROWS_AS(parse_ablation("shuffle"), ConfigError);
  }
}
