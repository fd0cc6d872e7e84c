#pragma once

// Binary trace container, little-endian:
//
//   "QDTR"                 4 bytes magic
//   version                u16, currently 1
//   header_length          u32
//   header                 UTF-8 JSON, header_length bytes
//   counts                 n_sequences × u8
//
// Total size is 10 + header_length + n_sequences bytes.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "qdyne/error.hpp"
#include "qdyne/trace_sim.hpp"

namespace qdyne {

inline constexpr std::uint16_t kTraceFormatVersion = 1;
inline constexpr char kTraceMagic[4] = {'Q', 'D', 'T', 'R'};

class TraceFormatError : public Error {
 public:
  enum class Kind { Io, MalformedHeader, TruncatedData, VersionMismatch };
  TraceFormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// JSON header text for a trace (exactly what write_trace stores).
std::string trace_header_json(const PhotonTrace& trace);

void write_trace(const PhotonTrace& trace, std::ostream& out);
void write_trace(const PhotonTrace& trace, const std::filesystem::path& path);

PhotonTrace read_trace(std::istream& in);
PhotonTrace read_trace(const std::filesystem::path& path);

}  // namespace qdyne
