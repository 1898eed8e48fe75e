#include "ctperf/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "raw payloads are little-endian; big-endian hosts need byte swaps");
static_assert(sizeof(float) == 4, "f32le payloads assume 32-bit float");

namespace ctperf {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kFormatName = "ctperf-volume";
constexpr int kFormatVersion = 1;

[[noreturn]] void header_error(const fs::path& path, const std::string& what) {
    throw std::runtime_error("volume header " + path.string() + ": " + what);
}

void check_voxel_size(Vec3 voxel_size) {
    for (double s : voxel_size)
        if (!(s > 0.0))
            throw std::invalid_argument("volume writer: voxel_size entries must be positive");
}

fs::path raw_path_for(const fs::path& header_path) {
    fs::path p = header_path;
    p.replace_extension(".raw");
    return p;
}

ordered_json base_header(const std::string& dtype, const std::vector<int>& shape,
                         Vec3 voxel_size, const fs::path& header_path) {
    ordered_json h;
    h["format"] = kFormatName;
    h["version"] = kFormatVersion;
    h["dtype"] = dtype;
    h["shape"] = shape;
    h["order"] = "x-fastest";
    h["voxel_size_mm"] = {voxel_size[0], voxel_size[1], voxel_size[2]};
    h["data"] = raw_path_for(header_path).filename().string();
    return h;
}

void write_header_and_payload(const fs::path& header_path, const ordered_json& header,
                              std::string payload) {
    write_file_atomic(raw_path_for(header_path), std::move(payload));
    write_file_atomic(header_path, header.dump(2) + "\n");
}

std::string f32_payload(const std::vector<double>& values) {
    std::string bytes(values.size() * 4, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        const float f = static_cast<float>(values[i]);
        std::memcpy(bytes.data() + i * 4, &f, 4);
    }
    return bytes;
}

ordered_json parse_header(const fs::path& header_path) {
    std::ifstream in(header_path);
    if (!in) header_error(header_path, "cannot open file");
    try {
        ordered_json h;
        in >> h;
        return h;
    } catch (const nlohmann::json::exception& e) {
        header_error(header_path, std::string("invalid JSON: ") + e.what());
    }
}

const ordered_json& require_field(const ordered_json& h, const char* key,
                                  const fs::path& path) {
    const auto it = h.find(key);
    if (it == h.end()) header_error(path, std::string("missing field '") + key + "'");
    return *it;
}

double require_number(const ordered_json& h, const char* key, const fs::path& path) {
    const auto& v = require_field(h, key, path);
    if (!v.is_number()) header_error(path, std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

std::string require_string(const ordered_json& h, const char* key, const fs::path& path) {
    const auto& v = require_field(h, key, path);
    if (!v.is_string()) header_error(path, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

struct ParsedHeader {
    std::string dtype;
    std::vector<int> shape;
    Vec3 voxel_size{};
    fs::path raw_path;
    ordered_json json;
};

ParsedHeader check_common(const fs::path& path, const std::string& want_dtype,
                          std::size_t want_rank) {
    ParsedHeader p;
    p.json = parse_header(path);
    const auto& h = p.json;

    if (require_string(h, "format", path) != kFormatName)
        header_error(path, "field 'format' must be \"" + std::string(kFormatName) + "\"");
    if (require_number(h, "version", path) != kFormatVersion)
        header_error(path, "field 'version' must be " + std::to_string(kFormatVersion));

    p.dtype = require_string(h, "dtype", path);
    if (p.dtype != want_dtype)
        header_error(path, "field 'dtype' must be \"" + want_dtype + "\", found \"" + p.dtype +
                               "\"");

    const auto& shape = require_field(h, "shape", path);
    if (!shape.is_array() || shape.size() != want_rank)
        header_error(path, "field 'shape' must be an array of " + std::to_string(want_rank) +
                               " entries");
    for (const auto& s : shape) {
        if (!s.is_number_integer() || s.get<int>() <= 0)
            header_error(path, "field 'shape' entries must be positive integers");
        p.shape.push_back(s.get<int>());
    }

    if (require_string(h, "order", path) != "x-fastest")
        header_error(path, "field 'order' must be \"x-fastest\"");

    const auto& vs = require_field(h, "voxel_size_mm", path);
    if (!vs.is_array() || vs.size() != 3)
        header_error(path, "field 'voxel_size_mm' must be an array of 3 entries");
    for (std::size_t i = 0; i < 3; ++i) {
        if (!vs[i].is_number() || !(vs[i].get<double>() > 0.0))
            header_error(path, "field 'voxel_size_mm' entries must be positive numbers");
        p.voxel_size[i] = vs[i].get<double>();
    }

    p.raw_path = path.parent_path() / require_string(h, "data", path);
    return p;
}

std::string read_raw(const fs::path& raw_path, std::size_t expected_bytes,
                     const fs::path& header_path) {
    std::ifstream in(raw_path, std::ios::binary);
    if (!in)
        header_error(header_path, "field 'data': cannot open payload " + raw_path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != expected_bytes)
        header_error(header_path,
                     "payload " + raw_path.string() + " holds " +
                         std::to_string(bytes.size()) + " bytes, shape requires " +
                         std::to_string(expected_bytes));
    return bytes;
}

std::vector<double> f32_values(const std::string& bytes) {
    std::vector<double> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        float f;
        std::memcpy(&f, bytes.data() + i * 4, 4);
        out[i] = static_cast<double>(f);
    }
    return out;
}

TimeGrid read_grid(const ordered_json& h, const fs::path& path) {
    const auto& g = require_field(h, "grid", path);
    if (!g.is_object()) header_error(path, "field 'grid' must be an object");
    TimeGrid grid;
    grid.t_start = require_number(g, "t_start_s", path);
    grid.dt = require_number(g, "dt_s", path);
    const double n = require_number(g, "n_samples", path);
    grid.n_samples = static_cast<int>(n);
    if (grid.n_samples != n || grid.n_samples < 2)
        header_error(path, "field 'grid.n_samples' must be an integer >= 2");
    if (!(grid.dt > 0.0)) header_error(path, "field 'grid.dt_s' must be positive");
    return grid;
}

ordered_json grid_json(const TimeGrid& grid) {
    ordered_json g;
    g["t_start_s"] = grid.t_start;
    g["dt_s"] = grid.dt;
    g["n_samples"] = grid.n_samples;
    return g;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_volume(const fs::path& header_path, const Volume3<double>& volume,
                  Vec3 voxel_size) {
    check_voxel_size(voxel_size);
    if (volume.empty()) throw std::invalid_argument("write_volume: empty volume");
    const auto h = base_header(
        "f32le", {volume.shape[0], volume.shape[1], volume.shape[2]}, voxel_size, header_path);
    write_header_and_payload(header_path, h, f32_payload(volume.data));
}

Volume3<double> read_volume(const fs::path& header_path, Vec3* voxel_size) {
    const auto p = check_common(header_path, "f32le", 3);
    Volume3<double> vol;
    vol.shape = {p.shape[0], p.shape[1], p.shape[2]};
    const std::size_t n =
        static_cast<std::size_t>(p.shape[0]) * p.shape[1] * p.shape[2];
    vol.data = f32_values(read_raw(p.raw_path, 4 * n, header_path));
    if (voxel_size) *voxel_size = p.voxel_size;
    return vol;
}

void write_mask(const fs::path& header_path, const Mask3& mask, Vec3 voxel_size) {
    check_voxel_size(voxel_size);
    if (mask.empty()) throw std::invalid_argument("write_mask: empty mask");
    const auto h =
        base_header("u8", {mask.shape[0], mask.shape[1], mask.shape[2]}, voxel_size,
                    header_path);
    std::string payload(mask.data.size(), '\0');
    std::memcpy(payload.data(), mask.data.data(), mask.data.size());
    write_header_and_payload(header_path, h, std::move(payload));
}

Mask3 read_mask(const fs::path& header_path, Vec3* voxel_size) {
    const auto p = check_common(header_path, "u8", 3);
    Mask3 mask;
    mask.shape = {p.shape[0], p.shape[1], p.shape[2]};
    const std::size_t n =
        static_cast<std::size_t>(p.shape[0]) * p.shape[1] * p.shape[2];
    const std::string bytes = read_raw(p.raw_path, n, header_path);
    mask.data.resize(bytes.size());
    std::memcpy(mask.data.data(), bytes.data(), bytes.size());
    if (voxel_size) *voxel_size = p.voxel_size;
    return mask;
}

void write_series(const fs::path& header_path, const CtpSeries& series) {
    check_voxel_size(series.voxel_size);
    if (series.data.voxels() == 0) throw std::invalid_argument("write_series: empty series");
    validate_grid(series.grid);
    auto h = base_header("f32le",
                         {series.data.shape[0], series.data.shape[1], series.data.shape[2],
                          series.data.n_t},
                         series.voxel_size, header_path);
    h["grid"] = grid_json(series.grid);
    // keep "data" last for readability
    const std::string raw_name = h["data"];
    h.erase("data");
    h["data"] = raw_name;
    write_header_and_payload(header_path, h, f32_payload(series.data.data));
}

CtpSeries read_series(const fs::path& header_path) {
    const auto p = check_common(header_path, "f32le", 4);
    CtpSeries series;
    series.voxel_size = p.voxel_size;
    series.grid = read_grid(p.json, header_path);
    if (series.grid.n_samples != p.shape[3])
        header_error(header_path, "field 'grid.n_samples' (" +
                                      std::to_string(series.grid.n_samples) +
                                      ") does not match shape[3] (" +
                                      std::to_string(p.shape[3]) + ")");
    series.data.shape = {p.shape[0], p.shape[1], p.shape[2]};
    series.data.n_t = p.shape[3];
    const std::size_t n = series.data.voxels() * static_cast<std::size_t>(p.shape[3]);
    series.data.data = f32_values(read_raw(p.raw_path, 4 * n, header_path));
    return series;
}

void write_irf(const fs::path& header_path, const IrfMap& irf, Vec3 voxel_size) {
    check_voxel_size(voxel_size);
    if (irf.data.voxels() == 0) throw std::invalid_argument("write_irf: empty map");
    validate_grid(irf.grid);
    auto h = base_header(
        "f32le", {irf.data.shape[0], irf.data.shape[1], irf.data.shape[2], irf.data.n_t},
        voxel_size, header_path);
    h["grid"] = grid_json(irf.grid);
    h["method"] = to_string(irf.method);
    h["lambda_rel"] = irf.lambda_rel;
    const std::string raw_name = h["data"];
    h.erase("data");
    h["data"] = raw_name;
    write_header_and_payload(header_path, h, f32_payload(irf.data.data));
}

IrfMap read_irf(const fs::path& header_path, Vec3* voxel_size) {
    const auto p = check_common(header_path, "f32le", 4);
    IrfMap irf;
    irf.grid = read_grid(p.json, header_path);
    if (irf.grid.n_samples != p.shape[3])
        header_error(header_path, "field 'grid.n_samples' does not match shape[3]");
    try {
        irf.method = parse_method(require_string(p.json, "method", header_path));
    } catch (const std::invalid_argument& e) {
        header_error(header_path, std::string("field 'method': ") + e.what());
    }
    irf.lambda_rel = require_number(p.json, "lambda_rel", header_path);
    if (!(irf.lambda_rel >= 0.0 && irf.lambda_rel < 1.0))
        header_error(header_path, "field 'lambda_rel' must lie in [0, 1)");
    irf.data.shape = {p.shape[0], p.shape[1], p.shape[2]};
    irf.data.n_t = p.shape[3];
    const std::size_t n = irf.data.voxels() * static_cast<std::size_t>(p.shape[3]);
    irf.data.data = f32_values(read_raw(p.raw_path, 4 * n, header_path));
    if (voxel_size) *voxel_size = p.voxel_size;
    return irf;
}

void write_curve_csv(const fs::path& path, const Curve& curve) {
    validate_curve(curve);
    std::string out = "t_s,value\n";
    for (int k = 0; k < curve.grid.n_samples; ++k) {
        out += format_double(curve.grid.time(k));
        out += ',';
        out += format_double(curve.samples[k]);
        out += '\n';
    }
    write_file_atomic(path, out);
}

Curve read_curve_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("curve csv " + path.string() + ": cannot open file");
    std::string line;
    if (!std::getline(in, line) || line != "t_s,value")
        throw std::runtime_error("curve csv " + path.string() +
                                 ": first line must be \"t_s,value\"");
    std::vector<double> times, values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("curve csv " + path.string() + ": line " +
                                     std::to_string(lineno) + " has no comma");
        auto parse = [&](const std::string& tok) {
            double v = 0.0;
            const char* b = tok.data();
            const char* e = tok.data() + tok.size();
            const auto r = std::from_chars(b, e, v);
            if (r.ec != std::errc{} || r.ptr != e)
                throw std::runtime_error("curve csv " + path.string() + ": line " +
                                         std::to_string(lineno) + ": '" + tok +
                                         "' is not a number");
            return v;
        };
        times.push_back(parse(line.substr(0, comma)));
        values.push_back(parse(line.substr(comma + 1)));
    }
    if (times.size() < 2)
        throw std::runtime_error("curve csv " + path.string() + ": need at least 2 samples");
    TimeGrid grid;
    grid.t_start = times[0];
    grid.dt = times[1] - times[0];
    grid.n_samples = static_cast<int>(times.size());
    if (!(grid.dt > 0.0))
        throw std::runtime_error("curve csv " + path.string() + ": time column must increase");
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double expected = grid.t_start + static_cast<double>(k) * grid.dt;
        if (std::abs(times[k] - expected) > 1e-6 * grid.dt)
            throw std::runtime_error("curve csv " + path.string() +
                                     ": time column is not uniformly spaced at line " +
                                     std::to_string(k + 2));
    }
    return make_curve(std::move(values), grid);
}

void write_pgm_slice(const fs::path& path, const Volume3<double>& volume, int z, double vmin,
                     double vmax) {
    if (volume.empty()) throw std::invalid_argument("write_pgm_slice: empty volume");
    if (z < 0 || z >= volume.shape[2])
        throw std::invalid_argument("write_pgm_slice: slice index out of range");
    if (vmax < vmin) throw std::invalid_argument("write_pgm_slice: vmax must be >= vmin");
    const int nx = volume.shape[0], ny = volume.shape[1];
    std::string out = "P5\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(nx) * ny);
    const double span = vmax - vmin;
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            double u = span > 0.0 ? (volume.at(x, y, z) - vmin) / span : 0.0;
            u = std::clamp(u, 0.0, 1.0);
            out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(u * 255.0))));
        }
    }
    write_file_atomic(path, out);
}

void write_pgm_slice(const fs::path& path, const Mask3& mask, int z) {
    Volume3<double> v(mask.shape, 0.0);
    for (std::size_t i = 0; i < mask.size(); ++i) v.data[i] = mask.data[i] != 0 ? 1.0 : 0.0;
    write_pgm_slice(path, v, z, 0.0, 1.0);
}

std::string format_double(double value) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, r.ptr);
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex(const void* data, std::size_t n) {
    const std::uint64_t h = fnv1a64(data, n);
    char buf[17];
    for (int i = 0; i < 16; ++i)
        buf[15 - i] = "0123456789abcdef"[(h >> (4 * i)) & 0xF];
    buf[16] = '\0';
    return std::string(buf, 16);
}

}  // namespace ctperf
