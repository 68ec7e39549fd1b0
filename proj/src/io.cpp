#include "lordnet/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lordnet::io {

namespace fs = std::filesystem;

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double d) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

double get_f64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
    return std::bit_cast<double>(bits);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NumericError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void dump(const std::string& path, const std::string& bytes) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericError("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

void write_field(const std::string& path, const Field& f) {
    std::string buf;
    buf.reserve(16 + 4 * f.shape().size() + 8 * static_cast<std::size_t>(f.size()));
    buf += "LDNF";
    put_u32(buf, 1);
    put_u32(buf, static_cast<std::uint32_t>(f.rank()));
    for (int d : f.shape()) put_u32(buf, static_cast<std::uint32_t>(d));
    for (std::int64_t i = 0; i < f.size(); ++i) put_f64(buf, f[i]);
    dump(path, buf);
}

Field read_field(const std::string& path) {
    const std::string buf = slurp(path);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    if (buf.size() < 12 || std::memcmp(p, "LDNF", 4) != 0)
        throw NumericError("'" + path + "' is not an LDNF field file");
    const std::uint32_t version = get_u32(p + 4);
    if (version != 1) throw NumericError("'" + path + "': unsupported LDNF version");
    const std::uint32_t ndim = get_u32(p + 8);
    if (buf.size() < 12 + 4ull * ndim) throw NumericError("'" + path + "': truncated LDNF header");
    Shape shape;
    std::int64_t count = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        const auto d = static_cast<int>(get_u32(p + 12 + 4 * i));
        shape.push_back(d);
        count *= d;
    }
    const std::size_t off = 12 + 4ull * ndim;
    if (buf.size() != off + 8ull * static_cast<std::size_t>(count))
        throw NumericError("'" + path + "': payload length does not match dims");
    std::vector<double> data(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) data[static_cast<std::size_t>(i)] = get_f64(p + off + 8 * i);
    return Field(std::move(shape), std::move(data));
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& dir, const ParamSet& params, const nlohmann::json& config) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "lordnet-checkpoint";
    manifest["version"] = 1;
    manifest["config"] = config;
    nlohmann::json list = nlohmann::json::array();
    for (int i = 0; i < params.size(); ++i) {
        const std::string file = params.name(i) + ".ldnf";
        write_field((fs::path(dir) / file).string(), params.field(i));
        list.push_back({{"name", params.name(i)}, {"shape", params.field(i).shape()}, {"file", file}});
    }
    manifest["params"] = list;
    write_json_file((fs::path(dir) / "manifest.json").string(), manifest);
}

nlohmann::json load_checkpoint(const std::string& dir, ParamSet& params) {
    nlohmann::json manifest = read_json_file((fs::path(dir) / "manifest.json").string());
    const auto& list = manifest.at("params");
    if (static_cast<int>(list.size()) != params.size())
        throw ConfigError("checkpoint '" + dir + "' has " + std::to_string(list.size()) +
                          " params, model expects " + std::to_string(params.size()));
    for (const auto& entry : list) {
        const std::string name = entry.at("name").get<std::string>();
        const int idx = params.index_of(name);
        if (idx < 0) throw ConfigError("checkpoint parameter '" + name + "' unknown to the model");
        Field f = read_field((fs::path(dir) / entry.at("file").get<std::string>()).string());
        if (f.shape() != params.field(idx).shape())
            throw ShapeError("checkpoint parameter '" + name + "' shape " + shape_str(f.shape()) +
                             " vs model " + shape_str(params.field(idx).shape()));
        params.field(idx) = std::move(f);
    }
    return manifest;
}

// ---------------------------------------------------------------------------
// Renderers
// ---------------------------------------------------------------------------

static const Field& require_2d(const Field& f) {
    if (!(f.rank() == 2 || (f.rank() == 3 && f.dim(0) == 1)))
        throw ShapeError("renderer expects a 2D field (or (1,H,W)); got " + shape_str(f.shape()) +
                         " -- slice it first");
    return f;
}

void write_pgm(const std::string& path, const Field& f, bool binary) {
    require_2d(f);
    const int H = f.rank() == 2 ? f.dim(0) : f.dim(1);
    const int W = f.rank() == 2 ? f.dim(1) : f.dim(2);
    double lo = f[0], hi = f[0];
    for (std::int64_t i = 0; i < f.size(); ++i) {
        lo = std::min(lo, f[i]);
        hi = std::max(hi, f[i]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::string buf;
    std::ostringstream head;
    head << (binary ? "P5" : "P2") << "\n" << W << " " << H << "\n255\n";
    buf += head.str();
    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            const double v = f[static_cast<std::int64_t>(i) * W + j];
            const int g = static_cast<int>(std::lround(255.0 * (v - lo) / span));
            if (binary) {
                buf.push_back(static_cast<char>(g));
            } else {
                buf += std::to_string(g);
                buf.push_back(j + 1 == W ? '\n' : ' ');
            }
        }
    }
    dump(path, buf);
    nlohmann::json side;
    side["min"] = lo;
    side["max"] = hi;
    side["rows"] = H;
    side["cols"] = W;
    side["format"] = binary ? "P5" : "P2";
    write_json_file(path + ".json", side);
}

void write_csv(const std::string& path, const Field& f) {
    require_2d(f);
    const int H = f.rank() == 2 ? f.dim(0) : f.dim(1);
    const int W = f.rank() == 2 ? f.dim(1) : f.dim(2);
    std::ostringstream os;
    os.precision(17);
    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            os << f[static_cast<std::int64_t>(i) * W + j];
            os << (j + 1 == W ? '\n' : ',');
        }
    }
    dump(path, os.str());
}

Field read_csv_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NumericError("cannot open '" + path + "'");
    std::vector<double> data;
    std::string line;
    int rows = 0, cols = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        int c = 0;
        while (std::getline(ls, cell, ',')) {
            data.push_back(std::stod(cell));
            ++c;
        }
        if (cols < 0) cols = c;
        else if (c != cols) throw NumericError("'" + path + "': ragged CSV");
        ++rows;
    }
    return Field(Shape{1, rows, cols}, std::move(data));
}

void write_loss_curve(const std::string& path, const std::vector<CurvePoint>& curve) {
    std::ostringstream os;
    os.precision(17);
    os << "iteration,lr,loss\n";
    for (const auto& p : curve) os << p.iter << "," << p.lr << "," << p.loss << "\n";
    dump(path, os.str());
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

nlohmann::json read_json_file(const std::string& path) {
    try {
        return nlohmann::json::parse(slurp(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    dump(path, j.dump(2) + "\n");
}

void require_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                  const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

}  // namespace lordnet::io
