#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "gmge/ctprep.hpp"
#include "gmge/errors.hpp"

namespace gmge {

static_assert(std::endian::native == std::endian::little,
              "GMGV containers are little-endian; big-endian hosts are unsupported");

// GMGV volume container, all multi-byte fields little-endian:
//   offset 0   magic "GMGV" (4 bytes)
//   offset 4   u16 format version (currently 1)
//   offset 6   u16 dtype code (0 = 32-bit float)
//   offset 8   u32 dims W, H, D
//   offset 20  f32 spacing sx, sy, sz in mm
//   offset 32  payload: W*H*D scalars, x-fastest
inline constexpr char kVolumeMagic[4] = {'G', 'M', 'G', 'V'};
inline constexpr uint16_t kVolumeVersion = 1;
inline constexpr std::size_t kVolumeHeaderSize = 32;

namespace detail {

template <typename T>
void put_le(std::string& buf, T v) {
    char tmp[sizeof(T)];
    std::memcpy(tmp, &v, sizeof(T));
    buf.append(tmp, sizeof(T));
}

template <typename T>
T get_le(const std::string& buf, std::size_t off) {
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    return v;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace detail

inline std::string encode_volume(const CTVolume& vol) {
    std::string buf;
    buf.reserve(kVolumeHeaderSize + vol.size() * sizeof(float));
    buf.append(kVolumeMagic, 4);
    detail::put_le<uint16_t>(buf, kVolumeVersion);
    detail::put_le<uint16_t>(buf, 0);  // dtype: f32
    detail::put_le<uint32_t>(buf, static_cast<uint32_t>(vol.w));
    detail::put_le<uint32_t>(buf, static_cast<uint32_t>(vol.h));
    detail::put_le<uint32_t>(buf, static_cast<uint32_t>(vol.d));
    detail::put_le<float>(buf, vol.spacing[0]);
    detail::put_le<float>(buf, vol.spacing[1]);
    detail::put_le<float>(buf, vol.spacing[2]);
    const char* payload = reinterpret_cast<const char*>(vol.voxels.data());
    buf.append(payload, vol.size() * sizeof(float));
    return buf;
}

inline CTVolume decode_volume(const std::string& bytes, const std::string& origin = "volume") {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kVolumeMagic, 4) != 0)
        throw ParseError(origin + ": bad magic, expected \"GMGV\"", 0);
    if (bytes.size() < kVolumeHeaderSize)
        throw ParseError(origin + ": truncated header, expected " +
                             std::to_string(kVolumeHeaderSize) + " bytes, got " +
                             std::to_string(bytes.size()),
                         bytes.size());
    const auto version = detail::get_le<uint16_t>(bytes, 4);
    if (version != kVolumeVersion)
        throw ParseError(origin + ": unsupported format version " + std::to_string(version), 4);
    const auto dtype = detail::get_le<uint16_t>(bytes, 6);
    if (dtype != 0)
        throw ParseError(origin + ": unsupported dtype code " + std::to_string(dtype), 6);
    const auto w = detail::get_le<uint32_t>(bytes, 8);
    const auto h = detail::get_le<uint32_t>(bytes, 12);
    const auto d = detail::get_le<uint32_t>(bytes, 16);
    if (w == 0 || h == 0 || d == 0 || w > (1u << 24) || h > (1u << 24) || d > (1u << 24))
        throw ParseError(origin + ": implausible dims " + std::to_string(w) + "x" +
                             std::to_string(h) + "x" + std::to_string(d),
                         8);
    const std::size_t expected =
        kVolumeHeaderSize + static_cast<std::size_t>(w) * h * d * sizeof(float);
    if (bytes.size() != expected)
        throw ParseError(origin + ": truncated payload, expected " + std::to_string(expected) +
                             " bytes, got " + std::to_string(bytes.size()),
                         bytes.size());
    CTVolume vol(static_cast<int>(w), static_cast<int>(h), static_cast<int>(d));
    vol.spacing = {detail::get_le<float>(bytes, 20), detail::get_le<float>(bytes, 24),
                   detail::get_le<float>(bytes, 28)};
    std::memcpy(vol.voxels.data(), bytes.data() + kVolumeHeaderSize,
                vol.size() * sizeof(float));
    return vol;
}

inline void write_volume(const CTVolume& vol, const std::filesystem::path& path) {
    detail::write_file(path, encode_volume(vol));
}

inline CTVolume read_volume(const std::filesystem::path& path) {
    return decode_volume(detail::read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Manifest: comma-separated text, one row per patient.
//   patient_id,volume_path,label[,nose_slice,acromion_slice[,mask_path]]
// Lines starting with '#' and blank lines are skipped. Paths are
// resolved relative to the manifest's directory. label: 0 = ECE
// negative, 1 = ECE positive.
// ---------------------------------------------------------------------------
struct ManifestRow {
    std::string patient_id;
    std::filesystem::path volume_path;
    int label = 0;
    std::optional<int> nose_slice, acromion_slice;
    std::filesystem::path mask_path;  // empty when absent
};

struct Manifest {
    std::vector<ManifestRow> rows;
    std::filesystem::path dir;
};

inline Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    Manifest m;
    m.dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::unordered_set<std::string> ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else
                cur.push_back(c);
        }
        fields.push_back(cur);
        const std::string where = "manifest row " + std::to_string(line_no);
        if (fields.size() < 3 || fields.size() > 6)
            throw ValueError(where + ": expected 3 to 6 fields, got " +
                             std::to_string(fields.size()));
        ManifestRow row;
        row.patient_id = fields[0];
        if (row.patient_id.empty()) throw ValueError(where + ": empty patient_id");
        if (!ids.insert(row.patient_id).second)
            throw ValueError(where + ": duplicate patient_id \"" + row.patient_id + "\"");
        row.volume_path = m.dir / fields[1];
        if (fields[2] != "0" && fields[2] != "1")
            throw ValueError(where + ": label \"" + fields[2] + "\" not in {0,1}");
        row.label = fields[2] == "1" ? 1 : 0;
        auto parse_slice = [&](const std::string& s, const char* name) -> std::optional<int> {
            if (s.empty()) return std::nullopt;
            try {
                std::size_t pos = 0;
                int v = std::stoi(s, &pos);
                if (pos != s.size() || v < 0) throw std::invalid_argument(s);
                return v;
            } catch (const std::exception&) {
                throw ValueError(where + ": bad " + std::string(name) + " \"" + s + "\"");
            }
        };
        if (fields.size() >= 5) {
            row.nose_slice = parse_slice(fields[3], "nose_slice");
            row.acromion_slice = parse_slice(fields[4], "acromion_slice");
        } else if (fields.size() == 4) {
            throw ValueError(where + ": nose_slice given without acromion_slice");
        }
        if (fields.size() == 6 && !fields[5].empty()) row.mask_path = m.dir / fields[5];
        if (!std::filesystem::exists(row.volume_path))
            throw ValueError(where + ": volume file not found: " + row.volume_path.string());
        if (!row.mask_path.empty() && !std::filesystem::exists(row.mask_path))
            throw ValueError(where + ": mask file not found: " + row.mask_path.string());
        m.rows.push_back(std::move(row));
    }
    return m;
}

// ---------------------------------------------------------------------------
// PGM (P5) slice export for visual inspection: every `stride` axial
// slices, three images per slice — the raw volume slice, the heatmap
// slice, and an overlay where heat brightens the raw image toward
// white (zero heat leaves the slice unchanged).
// ---------------------------------------------------------------------------
namespace detail {
inline unsigned char to_byte(float v01) {
    const long q = std::lround(static_cast<double>(v01) * 255.0);
    return static_cast<unsigned char>(std::clamp(q, 0l, 255l));
}

inline void write_pgm(const std::filesystem::path& path, int w, int h,
                      const std::vector<unsigned char>& pix) {
    std::string buf = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    buf.append(reinterpret_cast<const char*>(pix.data()), pix.size());
    write_file(path, buf);
}
}  // namespace detail

// `values01` must share the volume's grid; both are expected in [0,1].
inline int export_heatmap_slices(const std::vector<float>& values01, const CTVolume& volume,
                                 const std::filesystem::path& out_dir, int stride = 10) {
    if (stride < 1) throw ValueError("export_heatmap_slices: stride must be >= 1");
    if (values01.size() != volume.size())
        throw DimError("export_heatmap_slices: heatmap grid does not match volume grid");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!std::filesystem::is_directory(out_dir))
        throw IoError("cannot create directory " + out_dir.string());
    const std::size_t plane = static_cast<std::size_t>(volume.w) * volume.h;
    int emitted = 0;
    for (int z = 0; z < volume.d; z += stride) {
        char name[32];
        std::vector<unsigned char> raw(plane), cam(plane), overlay(plane);
        for (std::size_t i = 0; i < plane; ++i) {
            const float r = volume.voxels[z * plane + i];
            const float c = values01[z * plane + i];
            raw[i] = detail::to_byte(r);
            cam[i] = detail::to_byte(c);
            overlay[i] = detail::to_byte(r + c * (1.f - r));
        }
        std::snprintf(name, sizeof(name), "slice_%04d_raw.pgm", z);
        detail::write_pgm(out_dir / name, volume.w, volume.h, raw);
        std::snprintf(name, sizeof(name), "slice_%04d_cam.pgm", z);
        detail::write_pgm(out_dir / name, volume.w, volume.h, cam);
        std::snprintf(name, sizeof(name), "slice_%04d_overlay.pgm", z);
        detail::write_pgm(out_dir / name, volume.w, volume.h, overlay);
        ++emitted;
    }
    return emitted;
}

}  // namespace gmge
