#include "rdbev/container.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

namespace rdbev {

namespace {

constexpr std::size_t kMaxHeaderBytes = 1 << 20;

struct ArrayEntry {
  std::string name;
  std::string dtype;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t bytes = 0;
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::size_t expected_bytes(const std::string& dtype, const std::vector<std::size_t>& shape) {
  const std::size_t n = product(shape);
  if (dtype == "complex64") return n * 8;
  if (dtype == "float32") return n * 4;
  if (dtype == "bits") return (n + 7) / 8;
  throw MalformedHeader("unknown dtype " + dtype);
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(shape[i]);
  }
  return s;
}

void append_f32(std::string& out, float v) {
  auto u = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xFFU));
}

float load_f32(const char* p) {
  std::uint32_t u = 0;
  for (int b = 0; b < 4; ++b)
    u |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<float>(u);
}

template <typename Get>
void append_bits(std::string& out, std::size_t n, Get get) {
  for (std::size_t byte = 0; byte < (n + 7) / 8; ++byte) {
    unsigned char v = 0;
    for (std::size_t b = 0; b < 8; ++b) {
      const std::size_t i = byte * 8 + b;
      if (i < n && get(i)) v |= static_cast<unsigned char>(1U << b);
    }
    out.push_back(static_cast<char>(v));
  }
}

bool load_bit(const char* p, std::size_t i) {
  return (static_cast<unsigned char>(p[i / 8]) >> (i % 8)) & 1U;
}

class PayloadWriter {
 public:
  void add(const std::string& name, const std::string& dtype,
           std::vector<std::size_t> shape, std::string bytes) {
    entries_.push_back({name, dtype, std::move(shape), payload_.size(), bytes.size()});
    payload_ += bytes;
  }
  std::string finish(const std::string& header_prefix) const {
    std::ostringstream os;
    os << header_prefix;
    for (const auto& e : entries_) {
      os << "array " << e.name << ' ' << e.dtype << ' ' << shape_str(e.shape) << ' '
         << e.offset << ' ' << e.bytes << '\n';
    }
    os << "end\n";
    return os.str() + payload_;
  }

 private:
  std::vector<ArrayEntry> entries_;
  std::string payload_;
};

std::string encode_mask(const BevMask& m) {
  std::string out;
  append_bits(out, m.size(), [&](std::size_t i) { return m[i]; });
  return out;
}

std::string encode_floats(const std::vector<float>& v) {
  std::string out;
  out.reserve(v.size() * 4);
  for (float f : v) append_f32(out, f);
  return out;
}

std::string grid_line(const BevGridSpec& g) {
  return "grid " + fmt_double(g.resolution) + ' ' + fmt_double(g.x_min) + ' ' +
         fmt_double(g.x_max) + ' ' + fmt_double(g.y_min) + ' ' + fmt_double(g.y_max) +
         '\n';
}

struct ParsedHeader {
  std::string kind;
  std::unordered_map<std::string, std::string> fields;
  std::vector<ArrayEntry> arrays;
  std::size_t payload_start = 0;

  const std::string& field(const std::string& key) const {
    auto it = fields.find(key);
    if (it == fields.end()) throw MalformedHeader("header missing `" + key + "`");
    return it->second;
  }
  const ArrayEntry* find(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return &a;
    return nullptr;
  }
  const ArrayEntry& need(const std::string& name) const {
    const ArrayEntry* a = find(name);
    if (!a) throw MalformedHeader("header missing array `" + name + "`");
    return *a;
  }
};

std::uint64_t parse_u64(const std::string& s) {
  try {
    std::size_t pos = 0;
    auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw MalformedHeader("bad integer `" + s + "`");
    return v;
  } catch (const std::logic_error&) {
    throw MalformedHeader("bad integer `" + s + "`");
  }
}

ParsedHeader parse_header(const std::string& bytes) {
  ParsedHeader h;
  std::size_t pos = 0;
  bool first = true;
  bool ended = false;
  while (pos < bytes.size() && pos < kMaxHeaderBytes) {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) break;
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (first) {
      int version = 0;
      if (key != kFrameMagic || !(ls >> version))
        throw MalformedHeader("not an RDBEV container");
      if (version != kFormatVersion)
        throw MalformedHeader("unsupported format version " + std::to_string(version));
      first = false;
      continue;
    }
    if (key == "end") {
      ended = true;
      break;
    }
    if (key == "array") {
      ArrayEntry e;
      std::string shape;
      if (!(ls >> e.name >> e.dtype >> shape >> e.offset >> e.bytes))
        throw MalformedHeader("bad array line: " + line);
      std::stringstream ss(shape);
      std::string dim;
      while (std::getline(ss, dim, ',')) e.shape.push_back(parse_u64(dim));
      if (e.shape.empty()) throw MalformedHeader("array without shape: " + line);
      h.arrays.push_back(std::move(e));
      continue;
    }
    if (key.empty()) throw MalformedHeader("blank header line");
    std::string rest;
    std::getline(ls, rest);
    if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
    if (key == "kind") h.kind = rest;
    h.fields[key] = rest;
  }
  if (first) throw MalformedHeader("empty container");
  if (!ended) throw MalformedHeader("header not terminated by `end`");
  h.payload_start = pos;
  return h;
}

BevGridSpec parse_grid(const std::string& s) {
  std::istringstream is(s);
  BevGridSpec g;
  if (!(is >> g.resolution >> g.x_min >> g.x_max >> g.y_min >> g.y_max))
    throw MalformedHeader("bad grid line");
  try {
    g.validate();
  } catch (const ConfigError& e) {
    throw MalformedHeader(std::string("bad grid: ") + e.what());
  }
  return g;
}

// Checks declared shape against the expected one, byte count against the
// shape, and that the array lies inside the payload.
const char* check_array(const ArrayEntry& a, const std::string& dtype,
                        const std::vector<std::size_t>& shape,
                        std::size_t payload_size, const std::string& bytes,
                        std::size_t payload_start) {
  if (a.dtype != dtype)
    throw ShapeMismatch("array `" + a.name + "` has dtype " + a.dtype + ", expected " +
                        dtype);
  if (a.shape != shape)
    throw ShapeMismatch("array `" + a.name + "` has shape " + shape_str(a.shape) +
                        ", expected " + shape_str(shape));
  if (a.bytes != expected_bytes(dtype, shape))
    throw ShapeMismatch("array `" + a.name + "` declares " + std::to_string(a.bytes) +
                        " bytes for shape " + shape_str(shape));
  if (a.offset > payload_size || a.bytes > payload_size - a.offset)
    throw TruncatedPayload("payload ends inside array `" + a.name + "`");
  return bytes.data() + payload_start + a.offset;
}

std::size_t declared_payload(const ParsedHeader& h) {
  std::size_t end = 0;
  for (const auto& a : h.arrays) end = std::max(end, a.offset + a.bytes);
  return end;
}

void check_payload_size(const ParsedHeader& h, const std::string& bytes) {
  const std::size_t have = bytes.size() - h.payload_start;
  const std::size_t want = declared_payload(h);
  if (have < want)
    throw TruncatedPayload("payload has " + std::to_string(have) + " bytes, header declares " +
                           std::to_string(want));
  if (have > want) throw FormatError("trailing bytes after payload");
}

BevMask decode_mask(const ParsedHeader& h, const std::string& bytes, const std::string& name,
                    const BevGridSpec& grid) {
  const std::size_t payload = bytes.size() - h.payload_start;
  const char* p = check_array(h.need(name), "bits",
                              {static_cast<std::size_t>(grid.rows()),
                               static_cast<std::size_t>(grid.cols())},
                              payload, bytes, h.payload_start);
  BevMask m(grid);
  for (std::size_t i = 0; i < m.size(); ++i) m.set_flat(i, load_bit(p, i));
  return m;
}

PredictionMap decode_prediction_array(const ParsedHeader& h, const std::string& bytes,
                                      const BevGridSpec& grid) {
  const std::size_t payload = bytes.size() - h.payload_start;
  const char* p = check_array(h.need("prediction"), "float32",
                              {static_cast<std::size_t>(grid.rows()),
                               static_cast<std::size_t>(grid.cols())},
                              payload, bytes, h.payload_start);
  std::vector<float> v(grid.num_cells());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = load_f32(p + 4 * i);
  return PredictionMap(grid, std::move(v));
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void spit(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::string encode_frame(const FrameRecord& record) {
  record.validate();
  const BevGridSpec& grid = record.grid();
  const RadarConfig& radar = record.rd.config();
  std::ostringstream hdr;
  hdr << kFrameMagic << ' ' << kFormatVersion << '\n'
      << "kind frame\n"
      << "frame_id " << record.frame_id << '\n'
      << "sequence_id " << record.sequence_id << '\n'
      << grid_line(grid) << "radar_digest " << radar.digest() << '\n'
      << "radar " << radar.serialize() << '\n';
  if (record.prediction) hdr << "method " << record.prediction_method << '\n';

  PayloadWriter w;
  {
    std::string rd;
    rd.reserve(record.rd.data().size() * 8);
    for (const auto& v : record.rd.data()) {
      append_f32(rd, v.real());
      append_f32(rd, v.imag());
    }
    auto s = record.rd.shape();
    w.add("rd", "complex64", {s[0], s[1], s[2], s[3]}, std::move(rd));
  }
  const std::vector<std::size_t> hw{static_cast<std::size_t>(grid.rows()),
                                    static_cast<std::size_t>(grid.cols())};
  w.add("occupancy", "bits", hw, encode_mask(record.label.occupancy));
  w.add("observable", "bits", hw, encode_mask(record.label.observable));
  w.add("hfov", "bits", hw, encode_mask(record.hfov));
  w.add("sup", "bits", hw, encode_mask(record.sup));
  if (record.prediction) w.add("prediction", "float32", hw, encode_floats(record.prediction->values()));
  if (record.points) {
    const auto& pts = record.points->points;
    std::string xyz;
    xyz.reserve(pts.size() * 12);
    for (const auto& p : pts) {
      append_f32(xyz, p.x);
      append_f32(xyz, p.y);
      append_f32(xyz, p.z);
    }
    w.add("points", "float32", {pts.size(), 3}, std::move(xyz));
    std::string flags;
    append_bits(flags, pts.size(), [&](std::size_t i) { return pts[i].ground; });
    w.add("ground", "bits", {pts.size()}, std::move(flags));
  }
  return w.finish(hdr.str());
}

FrameRecord decode_frame(const std::string& bytes) {
  const ParsedHeader h = parse_header(bytes);
  if (h.kind != "frame") throw MalformedHeader("container kind is `" + h.kind + "`, not frame");
  FrameRecord rec;
  rec.frame_id = parse_u64(h.field("frame_id"));
  rec.sequence_id = parse_u64(h.field("sequence_id"));
  const BevGridSpec grid = parse_grid(h.field("grid"));
  RadarConfig radar;
  try {
    radar = RadarConfig::parse(h.field("radar"));
  } catch (const ConfigError& e) {
    throw MalformedHeader(std::string("bad radar config: ") + e.what());
  }
  if (radar.digest() != h.field("radar_digest"))
    throw MalformedHeader("radar digest does not match radar config");

  // Shapes are checked for every array before the size check, so a header
  // that disagrees with its config reports a shape mismatch, not truncation.
  const std::size_t payload = bytes.size() - h.payload_start;
  RdFrame rd(radar);
  auto s = rd.shape();
  const ArrayEntry& rd_entry = h.need("rd");
  if (rd_entry.shape != std::vector<std::size_t>{s[0], s[1], s[2], s[3]} ||
      rd_entry.dtype != "complex64")
    throw ShapeMismatch("rd array shape " + shape_str(rd_entry.shape) +
                        " does not match radar config " +
                        shape_str({s[0], s[1], s[2], s[3]}));
  check_payload_size(h, bytes);
  const char* p = check_array(rd_entry, "complex64", {s[0], s[1], s[2], s[3]}, payload, bytes,
                              h.payload_start);
  auto& data = rd.data();
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = {load_f32(p + 8 * i), load_f32(p + 8 * i + 4)};
  rec.rd = std::move(rd);

  rec.label.occupancy = decode_mask(h, bytes, "occupancy", grid);
  rec.label.observable = decode_mask(h, bytes, "observable", grid);
  rec.hfov = decode_mask(h, bytes, "hfov", grid);
  rec.sup = decode_mask(h, bytes, "sup", grid);
  if (h.find("prediction")) {
    rec.prediction = decode_prediction_array(h, bytes, grid);
    rec.prediction_method = h.field("method");
  }
  if (const ArrayEntry* pts = h.find("points")) {
    if (pts->shape.size() != 2 || pts->shape[1] != 3)
      throw ShapeMismatch("points array must be N,3");
    const std::size_t n = pts->shape[0];
    const char* pp = check_array(*pts, "float32", {n, 3}, payload, bytes, h.payload_start);
    const char* gp = check_array(h.need("ground"), "bits", {n}, payload, bytes, h.payload_start);
    PointCloud pc;
    pc.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      pc.points[i] = {load_f32(pp + 12 * i), load_f32(pp + 12 * i + 4),
                      load_f32(pp + 12 * i + 8), load_bit(gp, i)};
    }
    rec.points = std::move(pc);
  }
  try {
    rec.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("record invariant violated: ") + e.what());
  }
  return rec;
}

void write_frame(const FrameRecord& record, const std::filesystem::path& path) {
  spit(path, encode_frame(record));
}

FrameRecord read_frame(const std::filesystem::path& path) { return decode_frame(slurp(path)); }

std::string encode_prediction(const PredictionRecord& record) {
  record.map.validate();
  const BevGridSpec& grid = record.map.grid();
  if (record.method.empty() || record.method.find_first_of(" \t\n") != std::string::npos)
    throw std::invalid_argument("prediction method must be a single nonempty token");
  std::ostringstream hdr;
  hdr << kFrameMagic << ' ' << kFormatVersion << '\n'
      << "kind prediction\n"
      << "frame_id " << record.frame_id << '\n'
      << "sequence_id " << record.sequence_id << '\n'
      << grid_line(grid) << "method " << record.method << '\n';
  PayloadWriter w;
  w.add("prediction", "float32",
        {static_cast<std::size_t>(grid.rows()), static_cast<std::size_t>(grid.cols())},
        encode_floats(record.map.values()));
  return w.finish(hdr.str());
}

PredictionRecord decode_prediction(const std::string& bytes) {
  const ParsedHeader h = parse_header(bytes);
  if (h.kind != "prediction")
    throw MalformedHeader("container kind is `" + h.kind + "`, not prediction");
  PredictionRecord rec;
  rec.frame_id = parse_u64(h.field("frame_id"));
  rec.sequence_id = parse_u64(h.field("sequence_id"));
  rec.method = h.field("method");
  const BevGridSpec grid = parse_grid(h.field("grid"));
  const ArrayEntry& a = h.need("prediction");
  if (a.shape != std::vector<std::size_t>{static_cast<std::size_t>(grid.rows()),
                                          static_cast<std::size_t>(grid.cols())})
    throw ShapeMismatch("prediction shape " + shape_str(a.shape) + " does not match grid");
  check_payload_size(h, bytes);
  rec.map = decode_prediction_array(h, bytes, grid);
  try {
    rec.map.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return rec;
}

void write_prediction(const PredictionRecord& record, const std::filesystem::path& path) {
  spit(path, encode_prediction(record));
}

PredictionRecord read_prediction(const std::filesystem::path& path) {
  return decode_prediction(slurp(path));
}

const char* split_name(Split s) { return s == Split::Train ? "train" : "val"; }

std::vector<ManifestEntry> Manifest::split(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& dir) {
  std::ostringstream os;
  os << "RDBEV-MANIFEST " << kFormatVersion << '\n' << "kind " << manifest.kind << '\n';
  for (const auto& [k, v] : manifest.meta) os << "meta " << k << ' ' << v << '\n';
  os << "frames " << manifest.entries.size() << '\n';
  for (const auto& e : manifest.entries)
    os << "frame " << e.frame_id << ' ' << e.sequence_id << ' ' << split_name(e.split) << ' '
       << e.file << '\n';
  spit(dir / kManifestName, os.str());
}

Manifest read_manifest(const std::filesystem::path& dir) {
  const std::string text = slurp(dir / kManifestName);
  std::istringstream is(text);
  std::string line;
  Manifest m;
  std::size_t declared = 0;
  bool header = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key.empty()) continue;
    if (!header) {
      int version = 0;
      if (key != "RDBEV-MANIFEST" || !(ls >> version) || version != kFormatVersion)
        throw MalformedHeader("not an RDBEV manifest: " + (dir / kManifestName).string());
      header = true;
    } else if (key == "kind") {
      ls >> m.kind;
    } else if (key == "meta") {
      std::string k, v;
      ls >> k;
      std::getline(ls, v);
      if (!v.empty() && v.front() == ' ') v.erase(0, 1);
      m.meta[k] = v;
    } else if (key == "frames") {
      ls >> declared;
    } else if (key == "frame") {
      ManifestEntry e;
      std::string split;
      if (!(ls >> e.frame_id >> e.sequence_id >> split >> e.file))
        throw MalformedHeader("bad manifest line: " + line);
      if (split == "train")
        e.split = Split::Train;
      else if (split == "val")
        e.split = Split::Val;
      else
        throw MalformedHeader("bad split `" + split + "`");
      m.entries.push_back(std::move(e));
    } else {
      throw MalformedHeader("unknown manifest key `" + key + "`");
    }
  }
  if (!header) throw MalformedHeader("empty manifest");
  if (declared != m.entries.size())
    throw TruncatedPayload("manifest declares " + std::to_string(declared) + " frames, lists " +
                           std::to_string(m.entries.size()));
  return m;
}

SplitResult split_sequences(const std::vector<FrameKey>& frames, double ratio,
                            std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0, 1)");
  std::map<std::uint64_t, std::vector<std::uint64_t>> by_seq;
  for (const auto& f : frames) by_seq[f.sequence_id].push_back(f.frame_id);
  if (by_seq.size() < 2) throw std::invalid_argument("need at least 2 sequences to split");

  std::vector<std::uint64_t> order;
  for (const auto& [seq, ids] : by_seq) order.push_back(seq);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
    return by_seq[a].size() > by_seq[b].size();
  });

  const double target = ratio * static_cast<double>(frames.size());
  std::vector<std::uint64_t> train_seqs, val_seqs;
  double train_count = 0.0;
  for (std::uint64_t seq : order) {
    const double n = static_cast<double>(by_seq[seq].size());
    if (std::abs(train_count + n - target) <= std::abs(train_count - target)) {
      train_seqs.push_back(seq);
      train_count += n;
    } else {
      val_seqs.push_back(seq);
    }
  }
  // Greedy order is largest first, so the smallest sequence sits at the back.
  if (val_seqs.empty()) {
    val_seqs.push_back(train_seqs.back());
    train_seqs.pop_back();
  } else if (train_seqs.empty()) {
    train_seqs.push_back(val_seqs.front());
    val_seqs.erase(val_seqs.begin());
  }

  SplitResult out;
  for (std::uint64_t seq : train_seqs)
    out.train.insert(out.train.end(), by_seq[seq].begin(), by_seq[seq].end());
  for (std::uint64_t seq : val_seqs)
    out.val.insert(out.val.end(), by_seq[seq].begin(), by_seq[seq].end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

}  // namespace rdbev
