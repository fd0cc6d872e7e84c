#include "qdyne/trace_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

namespace qdyne {

namespace {

using json = nlohmann::json;
using Kind = TraceFormatError::Kind;

static_assert(std::endian::native == std::endian::little, "trace I/O assumes a little-endian host");

template <typename T>
void put_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &v, sizeof(T));
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<char, sizeof(T)> buf;
  if (!in.read(buf.data(), buf.size()))
    throw TraceFormatError(Kind::MalformedHeader, std::string("file too short for ") + what);
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  return v;
}

json signal_to_json(const SignalField& s) {
  return {{"amplitude_tesla", s.amplitude_tesla},
          {"frequency_hz", s.frequency_hz},
          {"phase_rad", s.phase_rad}};
}

json header_json(const PhotonTrace& t) {
  json h;
  h["tau_s"] = t.config.tau_s;
  h["sequence_length_s"] = t.config.sequence_length_s;
  h["overhead_s"] = t.config.overhead_s();
  h["mode"] = std::string(to_string(t.config.mode));
  h["dc_shift_hz"] = t.config.dc_shift_hz;
  h["readout_window_s"] = t.config.readout_window_s;
  h["dephasing"] = t.config.dephasing;
  h["lo"] = {{"sequence_length_s", t.lo.sequence_length_s},
             {"n_lo", t.lo.n_lo},
             {"offset_hz", t.lo.offset_hz}};
  h["sensor"] = {{"resonance_hz", t.sensor.resonance_hz},
                 {"gamma_rad_per_s_per_t", t.sensor.gamma_rad_per_s_per_t},
                 {"t2_star_s", t.sensor.t2_star_s},
                 {"bright_rate", t.sensor.bright_rate},
                 {"dark_rate", t.sensor.dark_rate}};
  h["seed"] = t.seed;
  h["rng_name"] = t.rng_name;
  h["n_sequences"] = t.counts.size();
  h["clamped"] = t.clamped;
  if (!t.truth.empty()) {
    json truth = json::array();
    for (const SignalField& s : t.truth) truth.push_back(signal_to_json(s));
    h["truth"] = std::move(truth);
  }
  return h;
}

PhotonTrace trace_from_header(const json& h, std::uint64_t& n_sequences) {
  PhotonTrace t;
  t.config.tau_s = h.at("tau_s").get<double>();
  t.config.sequence_length_s = h.at("sequence_length_s").get<double>();
  t.config.mode = parse_signal_mode(h.at("mode").get<std::string>());
  t.config.dc_shift_hz = h.at("dc_shift_hz").get<double>();
  t.config.readout_window_s = h.at("readout_window_s").get<double>();
  t.config.dephasing = h.value("dephasing", false);
  const json& lo = h.at("lo");
  t.lo.sequence_length_s = lo.at("sequence_length_s").get<double>();
  t.lo.n_lo = lo.at("n_lo").get<std::int64_t>();
  t.lo.offset_hz = lo.value("offset_hz", 0.0);
  const json& s = h.at("sensor");
  t.sensor.resonance_hz = s.at("resonance_hz").get<double>();
  t.sensor.gamma_rad_per_s_per_t = s.at("gamma_rad_per_s_per_t").get<double>();
  t.sensor.t2_star_s = s.at("t2_star_s").get<double>();
  t.sensor.bright_rate = s.at("bright_rate").get<double>();
  t.sensor.dark_rate = s.at("dark_rate").get<double>();
  t.seed = h.at("seed").get<std::uint64_t>();
  t.rng_name = h.at("rng_name").get<std::string>();
  t.clamped = h.value("clamped", false);
  n_sequences = h.at("n_sequences").get<std::uint64_t>();
  if (h.contains("truth")) {
    for (const json& j : h.at("truth")) {
      t.truth.push_back({j.at("amplitude_tesla").get<double>(), j.at("frequency_hz").get<double>(),
                         j.at("phase_rad").get<double>()});
    }
  }
  return t;
}

}  // namespace

std::string trace_header_json(const PhotonTrace& trace) { return header_json(trace).dump(); }

void write_trace(const PhotonTrace& trace, std::ostream& out) {
  const std::string header = trace_header_json(trace);
  out.write(kTraceMagic, 4);
  put_le<std::uint16_t>(out, kTraceFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(trace.counts.data()),
            static_cast<std::streamsize>(trace.counts.size()));
  if (!out) throw TraceFormatError(Kind::Io, "failed writing trace");
}

void write_trace(const PhotonTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TraceFormatError(Kind::Io, "cannot open " + path.string() + " for writing");
  write_trace(trace, out);
}

PhotonTrace read_trace(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kTraceMagic, 4) != 0)
    throw TraceFormatError(Kind::MalformedHeader, "missing QDTR magic");
  const auto version = get_le<std::uint16_t>(in, "version");
  if (version != kTraceFormatVersion)
    throw TraceFormatError(Kind::VersionMismatch,
                           "unsupported trace format version " + std::to_string(version));
  const auto header_len = get_le<std::uint32_t>(in, "header length");
  std::string header(header_len, '\0');
  if (!in.read(header.data(), header_len))
    throw TraceFormatError(Kind::MalformedHeader, "header shorter than its declared length");

  PhotonTrace trace;
  std::uint64_t n = 0;
  try {
    trace = trace_from_header(json::parse(header), n);
  } catch (const json::exception& e) {
    throw TraceFormatError(Kind::MalformedHeader, std::string("bad trace header: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw TraceFormatError(Kind::MalformedHeader, std::string("bad trace header: ") + e.what());
  }

  trace.counts.resize(n);
  in.read(reinterpret_cast<char*>(trace.counts.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::uint64_t>(in.gcount()) != n)
    throw TraceFormatError(Kind::TruncatedData,
                           "expected " + std::to_string(n) + " counts, got " +
                               std::to_string(in.gcount()));
  if (in.peek() != std::char_traits<char>::eof())
    throw TraceFormatError(Kind::MalformedHeader, "trailing bytes after count payload");
  return trace;
}

PhotonTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceFormatError(Kind::Io, "cannot open " + path.string());
  return read_trace(in);
}

}  // namespace qdyne
