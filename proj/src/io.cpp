#include "fuzzreg/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "fuzzreg/error.hpp"

namespace fuzzreg {

namespace {

using json = nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    return ss.str();
}

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

std::string lower_ext(const std::string& path) {
    const auto dot = path.find_last_of('.');
    const auto slash = path.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return {};
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

struct Line {
    std::string_view text;
    std::size_t number;
};

// Splits on '\n', dropping '\r' and anything after '#'.
std::vector<Line> split_lines(std::string_view data, bool strip_comments = true) {
    std::vector<Line> out;
    std::size_t start = 0, number = 1;
    while (start <= data.size()) {
        std::size_t end = data.find('\n', start);
        if (end == std::string_view::npos) end = data.size();
        std::string_view line = data.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (strip_comments) {
            const auto hash = line.find('#');
            if (hash != std::string_view::npos) line = line.substr(0, hash);
        }
        out.push_back({line, number});
        if (end == data.size()) break;
        start = end + 1;
        ++number;
    }
    return out;
}

std::vector<std::string_view> tokens(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        const std::size_t j = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > j) out.push_back(s.substr(j, i - j));
    }
    return out;
}

bool parse_double(std::string_view tok, double& v) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    return r.ec == std::errc() && r.ptr == tok.data() + tok.size() && std::isfinite(v);
}

template <typename Int>
bool parse_int(std::string_view tok, Int& v) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    return r.ec == std::errc() && r.ptr == tok.data() + tok.size();
}

double need_double(std::string_view tok, const std::string& src, std::size_t line) {
    double v = 0.0;
    if (!parse_double(tok, v)) throw ParseError(src, line, "bad number '" + std::string(tok) + "'");
    return v;
}

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---- xyz ----

PointSet read_xyz(const std::string& path) {
    const std::string data = read_file(path);
    PointSet pts;
    for (const auto& line : split_lines(data)) {
        const auto tok = tokens(line.text);
        if (tok.empty()) continue;
        if (tok.size() != 3) throw ParseError(path, line.number, "expected 3 coordinates");
        pts.emplace_back(need_double(tok[0], path, line.number), need_double(tok[1], path, line.number),
                         need_double(tok[2], path, line.number));
    }
    return pts;
}

// ---- obj ----

struct ObjData {
    PointSet vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;
};

ObjData parse_obj(const std::string& path, bool faces) {
    const std::string data = read_file(path);
    ObjData obj;
    struct PendingFace {
        std::vector<long long> idx;
        std::size_t line;
    };
    std::vector<PendingFace> pending;
    for (const auto& line : split_lines(data)) {
        const auto tok = tokens(line.text);
        if (tok.empty()) continue;
        if (tok[0] == "v") {
            // x y z, optional w or rgb
            if (tok.size() != 4 && tok.size() != 5 && tok.size() != 7) {
                throw ParseError(path, line.number, "vertex needs 3 coordinates");
            }
            for (std::size_t i = 4; i < tok.size(); ++i) need_double(tok[i], path, line.number);
            obj.vertices.emplace_back(need_double(tok[1], path, line.number), need_double(tok[2], path, line.number),
                                      need_double(tok[3], path, line.number));
        } else if (tok[0] == "f" && faces) {
            if (tok.size() < 4) throw ParseError(path, line.number, "face needs at least 3 vertices");
            PendingFace f{{}, line.number};
            for (std::size_t i = 1; i < tok.size(); ++i) {
                const std::string_view ref = tok[i].substr(0, tok[i].find('/'));
                long long v = 0;
                if (!parse_int(ref, v) || v == 0) throw ParseError(path, line.number, "bad face index");
                // negative indices count back from the latest vertex
                if (v < 0) v = static_cast<long long>(obj.vertices.size()) + v + 1;
                if (v < 1) throw ParseError(path, line.number, "face index out of range");
                f.idx.push_back(v - 1);
            }
            pending.push_back(std::move(f));
        }
    }
    for (const auto& f : pending) {
        for (auto v : f.idx) {
            if (static_cast<std::size_t>(v) >= obj.vertices.size()) {
                throw ParseError(path, f.line, "face index out of range");
            }
        }
        for (std::size_t k = 1; k + 1 < f.idx.size(); ++k) {
            obj.faces.push_back({static_cast<std::uint32_t>(f.idx[0]), static_cast<std::uint32_t>(f.idx[k]),
                                 static_cast<std::uint32_t>(f.idx[k + 1])});
        }
    }
    return obj;
}

// ---- ply ----

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

bool ply_type(std::string_view s, PlyType& t) {
    static const std::pair<const char*, PlyType> names[] = {
        {"char", PlyType::I8},     {"int8", PlyType::I8},     {"uchar", PlyType::U8},   {"uint8", PlyType::U8},
        {"short", PlyType::I16},   {"int16", PlyType::I16},   {"ushort", PlyType::U16}, {"uint16", PlyType::U16},
        {"int", PlyType::I32},     {"int32", PlyType::I32},   {"uint", PlyType::U32},   {"uint32", PlyType::U32},
        {"float", PlyType::F32},   {"float32", PlyType::F32}, {"double", PlyType::F64}, {"float64", PlyType::F64}};
    for (const auto& [n, v] : names) {
        if (s == n) {
            t = v;
            return true;
        }
    }
    return false;
}

std::size_t ply_size(PlyType t) {
    switch (t) {
        case PlyType::I8:
        case PlyType::U8: return 1;
        case PlyType::I16:
        case PlyType::U16: return 2;
        case PlyType::I32:
        case PlyType::U32:
        case PlyType::F32: return 4;
        case PlyType::F64: return 8;
    }
    return 0;
}

bool ply_integral(PlyType t) { return t != PlyType::F32 && t != PlyType::F64; }

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::F64;
    bool is_list = false;
    PlyType count_type = PlyType::U8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> props;
};

struct PlyData {
    PointSet vertices;
    std::vector<std::vector<long long>> faces;
};

// Reads one scalar from a little-endian buffer.
double read_le(const unsigned char* p, PlyType t) {
    std::uint64_t bits = 0;
    const std::size_t n = ply_size(t);
    for (std::size_t i = 0; i < n; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    switch (t) {
        case PlyType::I8: return static_cast<std::int8_t>(bits);
        case PlyType::U8: return static_cast<std::uint8_t>(bits);
        case PlyType::I16: return static_cast<std::int16_t>(bits);
        case PlyType::U16: return static_cast<std::uint16_t>(bits);
        case PlyType::I32: return static_cast<std::int32_t>(bits);
        case PlyType::U32: return static_cast<std::uint32_t>(bits);
        case PlyType::F32: return std::bit_cast<float>(static_cast<std::uint32_t>(bits));
        case PlyType::F64: return std::bit_cast<double>(bits);
    }
    return 0.0;
}

PlyData parse_ply(const std::string& path) {
    const std::string data = read_file(path);
    // header
    std::size_t pos = 0, line_no = 0;
    auto next_line = [&](std::string_view& out) {
        if (pos >= data.size()) return false;
        std::size_t end = data.find('\n', pos);
        if (end == std::string::npos) end = data.size();
        out = std::string_view(data).substr(pos, end - pos);
        if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
        pos = end + 1;
        ++line_no;
        return true;
    };

    std::string_view line;
    if (!next_line(line) || line != "ply") throw ParseError(path, 1, "missing ply magic");
    enum class Fmt { None, Ascii, Binary } fmt = Fmt::None;
    std::vector<PlyElement> elements;
    bool ended = false;
    while (next_line(line)) {
        const auto tok = tokens(line);
        if (tok.empty()) continue;
        if (tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "end_header") {
            ended = true;
            break;
        }
        if (tok[0] == "format") {
            if (tok.size() != 3) throw ParseError(path, line_no, "bad format line");
            if (tok[1] == "ascii") {
                fmt = Fmt::Ascii;
            } else if (tok[1] == "binary_little_endian") {
                fmt = Fmt::Binary;
            } else {
                throw ParseError(path, line_no, "unsupported ply format " + std::string(tok[1]));
            }
        } else if (tok[0] == "element") {
            std::size_t count = 0;
            if (tok.size() != 3 || !parse_int(tok[2], count)) throw ParseError(path, line_no, "bad element line");
            elements.push_back({std::string(tok[1]), count, {}});
        } else if (tok[0] == "property") {
            if (elements.empty()) throw ParseError(path, line_no, "property before element");
            PlyProperty p;
            if (tok.size() == 3 && ply_type(tok[1], p.type)) {
                p.name = tok[2];
            } else if (tok.size() == 5 && tok[1] == "list" && ply_type(tok[2], p.count_type) &&
                       ply_type(tok[3], p.type) && ply_integral(p.count_type)) {
                p.is_list = true;
                p.name = tok[4];
            } else {
                throw ParseError(path, line_no, "bad property line");
            }
            elements.back().props.push_back(p);
        } else {
            throw ParseError(path, line_no, "unknown header keyword " + std::string(tok[0]));
        }
    }
    if (!ended) throw ParseError(path, line_no, "missing end_header");
    if (fmt == Fmt::None) throw ParseError(path, line_no, "missing format line");

    PlyData out;
    // body cursors
    std::vector<Line> body_lines;
    std::size_t body_line = 0;
    std::vector<std::string_view> cur_tokens;
    std::size_t cur_tok = 0;
    if (fmt == Fmt::Ascii) body_lines = split_lines(std::string_view(data).substr(std::min(pos, data.size())), false);
    const std::size_t body_start_line = line_no;

    // ascii: one element instance per line
    auto load_line = [&]() -> std::size_t {
        while (body_line < body_lines.size()) {
            const auto& l = body_lines[body_line++];
            cur_tokens = tokens(l.text);
            cur_tok = 0;
            if (!cur_tokens.empty()) return body_start_line + l.number;
        }
        throw ParseError(path, body_start_line + body_lines.size(), "unexpected end of data");
    };

    std::size_t bpos = pos;
    auto read_bin = [&](PlyType t) {
        const std::size_t n = ply_size(t);
        if (bpos + n > data.size()) throw ParseError(path + ": unexpected end of binary data");
        const double v = read_le(reinterpret_cast<const unsigned char*>(data.data()) + bpos, t);
        bpos += n;
        return v;
    };

    for (const auto& el : elements) {
        const bool is_vertex = el.name == "vertex";
        const bool is_face = el.name == "face";
        int ix = -1, iy = -1, iz = -1, iface = -1;
        for (std::size_t i = 0; i < el.props.size(); ++i) {
            const auto& p = el.props[i];
            if (p.is_list) {
                if (p.name == "vertex_indices" || p.name == "vertex_index") iface = static_cast<int>(i);
                continue;
            }
            if (p.name == "x") ix = static_cast<int>(i);
            if (p.name == "y") iy = static_cast<int>(i);
            if (p.name == "z") iz = static_cast<int>(i);
        }
        if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) throw ParseError(path + ": vertex element lacks x/y/z");
        if (is_face && iface < 0) throw ParseError(path + ": face element lacks vertex_indices");

        for (std::size_t n = 0; n < el.count; ++n) {
            std::size_t ln = 0;
            if (fmt == Fmt::Ascii) ln = load_line();
            auto next_value = [&](PlyType t) {
                if (fmt == Fmt::Binary) return read_bin(t);
                if (cur_tok >= cur_tokens.size()) throw ParseError(path, ln, "too few values");
                const std::string_view tk = cur_tokens[cur_tok++];
                double v = 0.0;
                if (ply_integral(t)) {
                    long long iv = 0;
                    if (!parse_int(tk, iv)) throw ParseError(path, ln, "bad integer '" + std::string(tk) + "'");
                    v = static_cast<double>(iv);
                } else if (!parse_double(tk, v)) {
                    throw ParseError(path, ln, "bad number '" + std::string(tk) + "'");
                }
                return v;
            };
            Point3 p = Point3::Zero();
            for (std::size_t i = 0; i < el.props.size(); ++i) {
                const auto& prop = el.props[i];
                if (prop.is_list) {
                    const double cnt = next_value(prop.count_type);
                    if (cnt < 0) throw ParseError(path, ln, "negative list length");
                    std::vector<long long> items;
                    for (std::size_t k = 0; k < static_cast<std::size_t>(cnt); ++k) {
                        items.push_back(static_cast<long long>(next_value(prop.type)));
                    }
                    if (is_face && static_cast<int>(i) == iface) out.faces.push_back(std::move(items));
                } else {
                    const double v = next_value(prop.type);
                    if (static_cast<int>(i) == ix) p.x() = v;
                    if (static_cast<int>(i) == iy) p.y() = v;
                    if (static_cast<int>(i) == iz) p.z() = v;
                }
            }
            if (fmt == Fmt::Ascii && cur_tok != cur_tokens.size()) throw ParseError(path, ln, "too many values");
            if (is_vertex) {
                if (!p.allFinite()) throw ParseError(path, ln, "non-finite vertex");
                out.vertices.push_back(p);
            }
        }
    }
    return out;
}

}  // namespace

PointFormat point_format_for(const std::string& path) {
    const std::string ext = lower_ext(path);
    if (ext == "xyz" || ext == "txt" || ext == "pts") return PointFormat::Xyz;
    if (ext == "ply") return PointFormat::Ply;
    if (ext == "obj") return PointFormat::ObjVertices;
    throw InvalidParameter("unknown point-set extension: " + path);
}

MeshFormat mesh_format_for(const std::string& path) {
    const std::string ext = lower_ext(path);
    if (ext == "obj") return MeshFormat::Obj;
    if (ext == "ply") return MeshFormat::Ply;
    throw InvalidParameter("unknown mesh extension: " + path);
}

PointSet read_pointset(const std::string& path, PointFormat format) {
    PointSet pts;
    switch (format) {
        case PointFormat::Xyz: pts = read_xyz(path); break;
        case PointFormat::Ply: pts = parse_ply(path).vertices; break;
        case PointFormat::ObjVertices: pts = parse_obj(path, false).vertices; break;
    }
    if (pts.empty()) throw DegenerateInput("no points in " + path);
    return pts;
}

PointSet read_pointset(const std::string& path) { return read_pointset(path, point_format_for(path)); }

void write_pointset(const std::string& path, const PointSet& points, PointFormat format, bool binary) {
    auto out = open_out(path, binary);
    switch (format) {
        case PointFormat::Xyz:
            for (const auto& p : points) out << fmt_num(p.x()) << ' ' << fmt_num(p.y()) << ' ' << fmt_num(p.z()) << '\n';
            break;
        case PointFormat::ObjVertices:
            for (const auto& p : points) out << "v " << fmt_num(p.x()) << ' ' << fmt_num(p.y()) << ' ' << fmt_num(p.z()) << '\n';
            break;
        case PointFormat::Ply: {
            out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
                << "element vertex " << points.size() << "\n"
                << "property double x\nproperty double y\nproperty double z\nend_header\n";
            for (const auto& p : points) {
                if (binary) {
                    for (int a = 0; a < 3; ++a) {
                        auto bits = std::bit_cast<std::uint64_t>(p(a));
                        unsigned char b[8];
                        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
                        out.write(reinterpret_cast<const char*>(b), 8);
                    }
                } else {
                    out << fmt_num(p.x()) << ' ' << fmt_num(p.y()) << ' ' << fmt_num(p.z()) << '\n';
                }
            }
            break;
        }
    }
    finish(out, path);
}

void write_pointset(const std::string& path, const PointSet& points) {
    write_pointset(path, points, point_format_for(path));
}

Mesh read_mesh(const std::string& path, MeshFormat format) {
    Mesh m;
    if (format == MeshFormat::Obj) {
        ObjData obj = parse_obj(path, true);
        m.vertices = std::move(obj.vertices);
        m.faces = std::move(obj.faces);
        return m;
    }
    PlyData ply = parse_ply(path);
    m.vertices = std::move(ply.vertices);
    for (const auto& f : ply.faces) {
        if (f.size() < 3) throw ParseError(path + ": face with fewer than 3 vertices");
        for (auto v : f) {
            if (v < 0 || static_cast<std::size_t>(v) >= m.vertices.size()) {
                throw ParseError(path + ": face index out of range");
            }
        }
        for (std::size_t k = 1; k + 1 < f.size(); ++k) {
            m.faces.push_back({static_cast<std::uint32_t>(f[0]), static_cast<std::uint32_t>(f[k]),
                               static_cast<std::uint32_t>(f[k + 1])});
        }
    }
    return m;
}

Mesh read_mesh(const std::string& path) { return read_mesh(path, mesh_format_for(path)); }

void write_obj(const std::string& path, const Mesh& mesh) {
    auto out = open_out(path);
    for (const auto& p : mesh.vertices) out << "v " << fmt_num(p.x()) << ' ' << fmt_num(p.y()) << ' ' << fmt_num(p.z()) << '\n';
    for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    finish(out, path);
}

GrayImage read_pgm(const std::string& path) {
    const std::string data = read_file(path);
    std::size_t pos = 0, line = 1;
    GrayImage img;
    auto skip_space = [&] {
        while (pos < data.size()) {
            const char c = data[pos];
            if (c == '#') {
                const std::size_t end = data.find('\n', pos);
                std::string comment = data.substr(pos + 1, (end == std::string::npos ? data.size() : end) - pos - 1);
                if (!comment.empty() && comment.back() == '\r') comment.pop_back();
                img.comments.push_back(comment);
                pos = end == std::string::npos ? data.size() : end;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                if (c == '\n') ++line;
                ++pos;
            } else {
                break;
            }
        }
    };
    auto next_token = [&]() -> std::string_view {
        skip_space();
        const std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])) && data[pos] != '#') ++pos;
        return std::string_view(data).substr(start, pos - start);
    };
    auto next_int = [&](const char* what) {
        const auto tok = next_token();
        int v = 0;
        if (tok.empty() || !parse_int(tok, v)) throw ParseError(path, line, std::string("bad ") + what);
        return v;
    };

    const auto magic = next_token();
    if (magic != "P2" && magic != "P5") throw ParseError(path, line, "not a P2/P5 pgm");
    img.width = next_int("width");
    img.height = next_int("height");
    img.maxval = next_int("maxval");
    if (img.width < 1 || img.height < 1) throw ParseError(path, line, "image size must be positive");
    if (img.maxval < 1 || img.maxval > 65535) throw ParseError(path, line, "maxval out of range");
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    img.values.resize(n);

    if (magic == "P2") {
        for (std::size_t i = 0; i < n; ++i) {
            const auto tok = next_token();
            int v = 0;
            if (tok.empty()) throw ParseError(path, line, "too few pixel values");
            if (!parse_int(tok, v) || v < 0 || v > img.maxval) throw ParseError(path, line, "bad pixel value");
            img.values[i] = v;
        }
        skip_space();
        if (pos != data.size()) throw ParseError(path, line, "trailing data after raster");
    } else {
        // exactly one whitespace byte before the raster
        if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) {
            throw ParseError(path, line, "missing raster separator");
        }
        ++pos;
        const std::size_t bpp = img.maxval < 256 ? 1 : 2;
        if (data.size() - pos < n * bpp) throw ParseError(path, line, "truncated raster");
        const auto* p = reinterpret_cast<const unsigned char*>(data.data()) + pos;
        for (std::size_t i = 0; i < n; ++i) {
            const int v = bpp == 1 ? p[i] : (p[2 * i] << 8) | p[2 * i + 1];
            if (v > img.maxval) throw ParseError(path, line, "pixel value above maxval");
            img.values[i] = v;
        }
    }
    return img;
}

void write_pgm(const std::string& path, const GrayImage& img, bool binary) {
    if (img.width < 1 || img.height < 1 || img.values.size() != static_cast<std::size_t>(img.width) * img.height) {
        throw InvalidParameter("image size and raster disagree");
    }
    auto out = open_out(path, binary);
    out << (binary ? "P5" : "P2") << '\n';
    for (const auto& c : img.comments) out << '#' << c << '\n';
    out << img.width << ' ' << img.height << '\n' << img.maxval << '\n';
    if (binary) {
        for (int v : img.values) {
            if (img.maxval < 256) {
                out.put(static_cast<char>(v));
            } else {
                out.put(static_cast<char>(v >> 8));
                out.put(static_cast<char>(v & 0xff));
            }
        }
    } else {
        for (int v = 0; v < img.height; ++v) {
            for (int u = 0; u < img.width; ++u) {
                out << img.values[static_cast<std::size_t>(v) * img.width + u] << (u + 1 == img.width ? '\n' : ' ');
            }
        }
    }
    finish(out, path);
}

PixelMask read_mask(const std::string& path) {
    const GrayImage img = read_pgm(path);
    PixelMask m(img.width, img.height);
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) m.set(u, v, img.values[static_cast<std::size_t>(v) * img.width + u] != 0);
    }
    return m;
}

void write_mask(const std::string& path, const PixelMask& mask, bool binary) {
    GrayImage img;
    img.width = mask.width();
    img.height = mask.height();
    img.maxval = 255;
    img.values.resize(static_cast<std::size_t>(img.width) * img.height);
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) img.values[static_cast<std::size_t>(v) * img.width + u] = mask.get(u, v) ? 255 : 0;
    }
    write_pgm(path, img, binary);
}

void write_depth_pgm(const std::string& path, const DepthImage& img, double scale) {
    if (!(scale > 0.0)) throw InvalidParameter("depth scale must be positive");
    GrayImage g;
    g.width = img.width;
    g.height = img.height;
    g.maxval = 65535;
    g.comments = {" scale " + fmt_num(scale), " nodata 0"};
    g.values.resize(img.depth.size());
    for (std::size_t i = 0; i < img.depth.size(); ++i) {
        const double d = img.depth[i];
        g.values[i] = d == DepthImage::kNoData ? 0 : static_cast<int>(std::clamp(std::round(d * scale), 1.0, 65535.0));
    }
    write_pgm(path, g, false);
}

DepthImage read_depth_pgm(const std::string& path) {
    const GrayImage g = read_pgm(path);
    double scale = 0.0;
    for (const auto& c : g.comments) {
        const auto tok = tokens(c);
        if (tok.size() == 2 && tok[0] == "scale" && !parse_double(tok[1], scale)) {
            throw ParseError(path + ": bad scale comment");
        }
    }
    if (!(scale > 0.0)) throw ParseError(path + ": missing '# scale' header comment");
    DepthImage img;
    img.width = g.width;
    img.height = g.height;
    img.depth.resize(g.values.size());
    for (std::size_t i = 0; i < g.values.size(); ++i) img.depth[i] = g.values[i] == 0 ? DepthImage::kNoData : g.values[i] / scale;
    return img;
}

void write_depth_dump(const std::string& path, const DepthImage& img) {
    auto out = open_out(path);
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            const double d = img.at(u, v);
            if (d != DepthImage::kNoData) out << u << ' ' << v << ' ' << fmt_num(d) << '\n';
        }
    }
    finish(out, path);
}

CameraIntrinsics read_intrinsics(const std::string& path) {
    const std::string data = read_file(path);
    CameraIntrinsics K;
    std::map<std::string, std::size_t> seen;
    for (const auto& line : split_lines(data)) {
        std::string text(line.text);
        std::replace(text.begin(), text.end(), '=', ' ');
        const auto tok = tokens(text);
        if (tok.empty()) continue;
        if (tok.size() != 2) throw ParseError(path, line.number, "expected 'key = value'");
        const std::string key(tok[0]);
        if (seen.count(key)) throw ParseError(path, line.number, "duplicate key " + key);
        seen[key] = line.number;
        if (key == "width" || key == "height") {
            int v = 0;
            if (!parse_int(tok[1], v)) throw ParseError(path, line.number, "bad integer for " + key);
            (key == "width" ? K.width : K.height) = v;
        } else if (key == "fx" || key == "fy" || key == "cx" || key == "cy") {
            const double v = need_double(tok[1], path, line.number);
            if (key == "fx") K.fx = v;
            if (key == "fy") K.fy = v;
            if (key == "cx") K.cx = v;
            if (key == "cy") K.cy = v;
        } else {
            throw ParseError(path, line.number, "unknown key " + key);
        }
    }
    for (const char* key : {"fx", "fy", "cx", "cy", "width", "height"}) {
        if (!seen.count(key)) throw ParseError(path + ": missing key " + key);
    }
    try {
        K.validate();
    } catch (const InvalidParameter& e) {
        throw ParseError(path + ": " + e.what());
    }
    return K;
}

void write_intrinsics(const std::string& path, const CameraIntrinsics& K) {
    auto out = open_out(path);
    out << "fx = " << fmt_num(K.fx) << "\nfy = " << fmt_num(K.fy) << "\ncx = " << fmt_num(K.cx) << "\ncy = " << fmt_num(K.cy)
        << "\nwidth = " << K.width << "\nheight = " << K.height << '\n';
    finish(out, path);
}

std::string format_transform(const SimilarityTransform& theta, const TransformProvenance& prov) {
    const Quaternion q = theta.q.normalized();
    SimilarityTransform unit = theta;
    unit.q = q;
    const Mat4 m = unit.matrix();
    json j;
    j["quaternion"] = {q.w, q.x, q.y, q.z};
    j["translation"] = {theta.t.x(), theta.t.y(), theta.t.z()};
    j["scale"] = theta.s;
    json rows = json::array();
    for (int r = 0; r < 4; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
    j["matrix"] = rows;
    j["config"] = json::object();
    for (const auto& [k, v] : prov.config) j["config"][k] = v;
    json levels = json::array();
    for (const auto& l : prov.levels) {
        levels.push_back({{"sigma", l.sigma},
                          {"source_count", l.source_count},
                          {"target_count", l.target_count},
                          {"iterations", l.iterations},
                          {"accepted_steps", l.accepted_steps},
                          {"initial_energy", l.initial_energy},
                          {"final_energy", l.final_energy},
                          {"status", to_string(l.status)}});
    }
    j["levels"] = levels;
    if (prov.has_result) {
        j["converged"] = prov.converged;
        j["degenerate"] = prov.degenerate;
    }
    return j.dump(2) + "\n";
}

void write_transform(const std::string& path, const SimilarityTransform& theta, const TransformProvenance& prov) {
    auto out = open_out(path);
    out << format_transform(theta, prov);
    finish(out, path);
}

SimilarityTransform read_transform(const std::string& path) {
    const std::string data = read_file(path);
    json j;
    try {
        j = json::parse(data);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    auto numbers = [&](const char* key, std::size_t n) {
        if (!j.contains(key) || !j[key].is_array() || j[key].size() != n) {
            throw ParseError(path + ": field '" + key + "' must be an array of " + std::to_string(n) + " numbers");
        }
        std::vector<double> v;
        for (const auto& x : j[key]) {
            if (!x.is_number()) throw ParseError(path + ": non-numeric entry in '" + key + "'");
            v.push_back(x.get<double>());
        }
        return v;
    };
    const auto q = numbers("quaternion", 4);
    const auto t = numbers("translation", 3);
    if (!j.contains("scale") || !j["scale"].is_number()) throw ParseError(path + ": field 'scale' missing");
    SimilarityTransform T;
    T.q = {q[0], q[1], q[2], q[3]};
    T.t = Point3(t[0], t[1], t[2]);
    T.s = j["scale"].get<double>();
    if (!(T.s > 0.0) || !(T.q.norm() > 0.0)) throw ParseError(path + ": scale and quaternion must be nonzero");
    return T;
}

void write_sweep_csv(const std::string& path, const SweepReport& report) {
    auto out = open_out(path);
    out << "axis,angle_deg,trial,mean_error,success\n";
    for (const auto& t : report.trials) {
        out << axis_name(t.axis) << ',' << fmt_num(t.angle_deg) << ',' << t.trial << ',' << fmt_num(t.mean_error) << ','
            << (t.success ? 1 : 0) << '\n';
    }
    finish(out, path);
}

void write_sweep_summary(const std::string& path, const SweepReport& report,
                         const std::map<std::string, std::string>& info) {
    json j;
    j["threshold"] = report.threshold;
    j["trials"] = report.trials.size();
    j["success_rate"] = report.trials.empty() ? 0.0 : report.success_rate();
    json steps = json::array();
    for (const auto& [angle, err] : report.step_means()) {
        steps.push_back({{"angle_deg", angle}, {"mean_error", std::isfinite(err) ? json(err) : json(nullptr)}});
    }
    j["steps"] = steps;
    j["info"] = json::object();
    for (const auto& [k, v] : info) j["info"][k] = v;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

}  // namespace fuzzreg
