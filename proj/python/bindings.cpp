// numpy-facing bindings for the rdbev core.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "rdbev/pipeline.hpp"
#include "rdbev/supervision.hpp"

namespace py = pybind11;
using namespace rdbev;

namespace {

using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using C64 = py::array_t<std::complex<float>, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

py::array_t<bool> mask_array(const BevMask& m) {
  const auto& g = m.grid();
  py::array_t<bool> out({g.rows(), g.cols()});
  bool* p = out.mutable_data();
  for (std::size_t i = 0; i < m.size(); ++i) p[i] = m[i];
  return out;
}

py::array_t<float> map_array(const PredictionMap& m) {
  py::array_t<float> out({m.grid().rows(), m.grid().cols()});
  std::memcpy(out.mutable_data(), m.values().data(), m.values().size() * sizeof(float));
  return out;
}

C64 rd_array(const RdFrame& f) {
  const auto s = f.shape();
  C64 out({s[0], s[1], s[2], s[3]});
  std::memcpy(out.mutable_data(), f.data().data(), f.data().size() * sizeof(std::complex<float>));
  return out;
}

RdFrame rd_from(const C64& a, const RadarConfig& radar) {
  RdFrame f(radar);
  const auto s = f.shape();
  if (a.ndim() != 4 || static_cast<std::size_t>(a.shape(0)) != s[0] ||
      static_cast<std::size_t>(a.shape(1)) != s[1] || static_cast<std::size_t>(a.shape(2)) != s[2] ||
      static_cast<std::size_t>(a.shape(3)) != s[3])
    throw ShapeMismatch("rd array shape does not match the radar config");
  std::memcpy(f.data().data(), a.data(), f.data().size() * sizeof(std::complex<float>));
  return f;
}

RadarConfig radar_or_standard(const std::optional<std::string>& text) {
  return text ? RadarConfig::parse(*text) : RadarConfig::standard();
}

std::vector<std::uint8_t> bytes_of(const U8& a) { return {a.data(), a.data() + a.size()}; }

py::dict frame_dict(const FrameRecord& r) {
  py::dict d;
  d["frame_id"] = r.frame_id;
  d["sequence_id"] = r.sequence_id;
  d["radar"] = r.rd.config().serialize();
  d["resolution"] = r.grid().resolution;
  d["rd"] = rd_array(r.rd);
  d["occupancy"] = mask_array(r.label.occupancy);
  d["observable"] = mask_array(r.label.observable);
  d["hfov"] = mask_array(r.hfov);
  d["sup"] = mask_array(r.sup);
  d["unknown"] = mask_array(r.unknown());
  if (r.points) {
    py::array_t<float> pts({static_cast<py::ssize_t>(r.points->points.size()), py::ssize_t{4}});
    float* p = pts.mutable_data();
    for (const auto& q : r.points->points) {
      *p++ = q.x;
      *p++ = q.y;
      *p++ = q.z;
      *p++ = q.ground ? 1.0F : 0.0F;
    }
    d["points"] = pts;
  }
  return d;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["ap"] = r.ap;
  d["iou_occupied"] = r.iou_occupied;
  d["uhr"] = r.uhr;
  d["tau"] = r.tau;
  d["f1"] = r.f1;
  d["pos_frac"] = r.pos_frac;
  d["frames"] = r.frames;
  d["cells"] = r.cells;
  d["method"] = r.method;
  py::dict bands;
  for (const auto& b : r.bands) {
    py::dict bd;
    bd["ap"] = b.ap ? py::cast(*b.ap) : py::none();
    bd["iou"] = b.iou;
    bd["pos_frac"] = b.pos_frac;
    bd["cells"] = b.cells;
    bd["positives"] = b.positives;
    bands[py::str(b.name)] = bd;
  }
  d["bands"] = bands;
  return d;
}

ChirpSelection chirp_selection(const std::string& s) {
  if (s == "a_only") return ChirpSelection::AOnly;
  if (s == "b_only") return ChirpSelection::BOnly;
  if (s == "ab") return ChirpSelection::AB;
  throw ConfigError("chirp selection must be a_only, b_only or ab");
}

Chirp chirp_of(const std::string& s) {
  if (s == "A") return Chirp::A;
  if (s == "B") return Chirp::B;
  throw ConfigError("chirp must be A or B");
}

}  // namespace

PYBIND11_MODULE(_rdbev, m) {
  m.doc() = "Synthetic pre-beamforming radar RD / BEV occupancy toolkit";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<GridMismatch>(m, "GridMismatch", PyExc_ValueError);
  auto format_error = py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<MalformedHeader>(m, "MalformedHeader", format_error.ptr());
  py::register_exception<ShapeMismatch>(m, "ShapeMismatch", format_error.ptr());
  py::register_exception<TruncatedPayload>(m, "TruncatedPayload", format_error.ptr());
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<UndefinedMetric>(m, "UndefinedMetric", PyExc_ValueError);
  py::register_exception<EmptyChirp>(m, "EmptyChirp", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def("standard_radar", [] { return RadarConfig::standard().serialize(); },
        "Serialized default radar configuration.");
  m.def("grid_shape", [](double res) {
    const auto g = BevGridSpec::with_resolution(res);
    return py::make_tuple(g.rows(), g.cols());
  });
  m.def("hfov_mask", [](double res, double hfov_deg, double max_range) {
    return mask_array(hfov_mask(BevGridSpec::with_resolution(res), {0.0, 0.0}, hfov_deg, max_range));
  }, py::arg("resolution") = 0.5, py::arg("hfov_deg") = 64.0, py::arg("max_range") = 65.0);

  // Files.
  m.def("read_frame", [](const std::filesystem::path& p) { return frame_dict(read_frame(p)); });
  m.def("read_manifest", [](const std::filesystem::path& dir) {
    const Manifest man = read_manifest(dir);
    py::list entries;
    for (const auto& e : man.entries)
      entries.append(py::make_tuple(e.frame_id, e.sequence_id, split_name(e.split), e.file));
    py::dict d;
    d["kind"] = man.kind;
    d["meta"] = man.meta;
    d["entries"] = entries;
    return d;
  });
  m.def("write_prediction",
        [](const std::filesystem::path& p, std::uint64_t frame_id, std::uint64_t sequence_id,
           const std::string& method, const F32& probs, double resolution) {
          const auto g = BevGridSpec::with_resolution(resolution);
          if (probs.ndim() != 2 || probs.shape(0) != g.rows() || probs.shape(1) != g.cols())
            throw ShapeMismatch("prediction shape does not match the grid");
          PredictionMap map(g, std::vector<float>(probs.data(), probs.data() + probs.size()));
          write_prediction({frame_id, sequence_id, method, std::move(map)}, p);
        },
        py::arg("path"), py::arg("frame_id"), py::arg("sequence_id"), py::arg("method"),
        py::arg("probs"), py::arg("resolution") = 0.5);
  m.def("read_prediction", [](const std::filesystem::path& p) {
    const PredictionRecord r = read_prediction(p);
    py::dict d;
    d["frame_id"] = r.frame_id;
    d["sequence_id"] = r.sequence_id;
    d["method"] = r.method;
    d["resolution"] = r.map.grid().resolution;
    d["probs"] = map_array(r.map);
    return d;
  });
  m.def("write_predictions_manifest",
        [](const std::filesystem::path& dir, const std::string& method,
           const std::vector<std::tuple<std::uint64_t, std::uint64_t, std::string>>& entries) {
          Manifest man;
          man.kind = "predictions";
          man.meta["method"] = method;
          for (const auto& [id, seq, file] : entries) man.entries.push_back({id, seq, Split::Val, file});
          write_manifest(man, dir);
        },
        "Manifest for a directory of prediction files; entries are (frame_id, sequence_id, file).");
  m.def("frame_file_name", &frame_file_name);

  // RD transforms.
  m.def("normalize_rd", [](const C64& rd, std::optional<std::string> radar, double eps) {
    return rd_array(normalize_rd(rd_from(rd, radar_or_standard(radar)), eps));
  }, py::arg("rd"), py::arg("radar") = py::none(), py::arg("eps") = kNormalizeEps);
  m.def("select_chirps", [](const C64& rd, const std::string& mode, std::optional<std::string> radar) {
    return rd_array(select_chirps(rd_from(rd, radar_or_standard(radar)), chirp_selection(mode)));
  }, py::arg("rd"), py::arg("mode"), py::arg("radar") = py::none());
  m.def("apply_ablation", [](const C64& rd, const std::string& t, std::optional<std::string> radar) {
    return rd_array(apply_ablation(rd_from(rd, radar_or_standard(radar)), parse_ablation(t)));
  }, py::arg("rd"), py::arg("transform"), py::arg("radar") = py::none());
  m.def("beamform_oracle",
        [](const C64& rd, const std::string& chirp, int fft_size, std::optional<std::string> radar) {
          const RangeAzimuthMap ra =
              beamform_oracle(rd_from(rd, radar_or_standard(radar)), chirp_of(chirp), fft_size);
          py::array_t<double> out({ra.ranges(), ra.angles()});
          std::memcpy(out.mutable_data(), ra.values().data(), ra.values().size() * sizeof(double));
          return out;
        },
        py::arg("rd"), py::arg("chirp") = "A", py::arg("fft_size") = 64,
        py::arg("radar") = py::none(), "Range x angle magnitude map.");

  // Metrics.
  m.def("average_precision", [](const F64& s, const U8& y) {
    return average_precision({s.data(), static_cast<std::size_t>(s.size())}, bytes_of(y));
  });
  m.def("select_global_threshold", [](const F64& s, const U8& y) {
    const auto t = select_global_threshold({s.data(), static_cast<std::size_t>(s.size())}, bytes_of(y));
    return py::make_tuple(t.tau, t.f1);
  }, "Returns (tau, f1).");
  m.def("masked_focal_loss",
        [](const F64& z, const U8& y, const U8& mask, double gamma, double alpha) {
          return masked_focal_loss({z.data(), static_cast<std::size_t>(z.size())}, bytes_of(y),
                                   bytes_of(mask), {gamma, alpha});
        },
        py::arg("logits"), py::arg("labels"), py::arg("mask"), py::arg("gamma") = 2.0,
        py::arg("alpha") = 0.25);
  m.def("masked_focal_loss_grad",
        [](const F64& z, const U8& y, const U8& mask, double gamma, double alpha) {
          auto g = masked_focal_loss_grad({z.data(), static_cast<std::size_t>(z.size())},
                                          bytes_of(y), bytes_of(mask), {gamma, alpha});
          return py::array_t<double>(static_cast<py::ssize_t>(g.size()), g.data());
        },
        py::arg("logits"), py::arg("labels"), py::arg("mask"), py::arg("gamma") = 2.0,
        py::arg("alpha") = 0.25);

  // Pipeline commands.
  m.def("generate",
        [](const std::filesystem::path& out, const std::map<std::string, std::string>& overrides) {
          GeneratorConfig cfg;
          for (const auto& [k, v] : overrides) cfg.set(k, v);
          cfg.validate();
          py::gil_scoped_release release;
          generate_dataset(cfg, out);
          return cfg.digest();
        },
        py::arg("out"), py::arg("config") = std::map<std::string, std::string>{},
        "Generates a dataset; config values are generator keys as strings. Returns the config digest.");
  m.def("run_baseline",
        [](const std::filesystem::path& ds, const std::string& method, const std::filesystem::path& out,
           const std::string& chirp) {
          py::gil_scoped_release release;
          run_baseline(ds, parse_baseline_method(method), out, worker_count(), chirp_of(chirp));
        },
        py::arg("dataset"), py::arg("method"), py::arg("out"), py::arg("chirp") = "A");
  m.def("run_ablation",
        [](const std::filesystem::path& ds, const std::string& t, const std::filesystem::path& out) {
          py::gil_scoped_release release;
          run_ablation(ds, parse_ablation(t), out);
        },
        py::arg("dataset"), py::arg("transform"), py::arg("out"));
  m.def("evaluate",
        [](const std::filesystem::path& ds, const std::filesystem::path& preds,
           std::optional<std::filesystem::path> out) {
          EvalReport r;
          {
            py::gil_scoped_release release;
            r = run_evaluation(ds, preds);
            if (out) write_report(r, *out);
          }
          return report_dict(r);
        },
        py::arg("dataset"), py::arg("predictions"), py::arg("out") = py::none());
}
