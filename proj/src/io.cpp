#include "ccpd/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

namespace fs = std::filesystem;

namespace ccpd {
namespace {

std::runtime_error parse_error(const std::string& path, std::size_t line, const std::string& what) {
    std::ostringstream msg;
    msg << path << ":" << line << ": " << what;
    return std::runtime_error(msg.str());
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_fields(const std::string& line) {
    const char sep = line.find(',') != std::string::npos ? ',' : ' ';
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    if (sep == ',') {
        while (std::getline(in, field, sep)) out.push_back(trim(field));
    } else {
        while (in >> field) out.push_back(field);
    }
    return out;
}

double parse_double(const std::string& token, const std::string& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw parse_error(path, line, "unparseable number '" + token + "'");
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CloudFormat detect_format(const std::string& path) {
    const std::string ext = fs::path(path).extension().string();
    std::string lower;
    for (const char c : ext) lower.push_back(static_cast<char>(std::tolower(c)));
    if (lower == ".ply") return CloudFormat::ply;
    if (lower == ".pcd") return CloudFormat::pcd;
    return CloudFormat::csv;
}

// Color columns arrive either as unit floats or as 8-bit values; anything
// above 1 flags the 8-bit convention for the whole matrix.
Eigen::MatrixXd normalize_colors(Eigen::MatrixXd colors, const std::string& path) {
    if (colors.size() == 0) return colors;
    if (colors.maxCoeff() > 1.0) colors /= 255.0;
    if (colors.minCoeff() < 0.0 || colors.maxCoeff() > 1.0)
        throw std::runtime_error(path + ": color out of range after normalization");
    return colors;
}

ColoredPointSet read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::vector<std::vector<double>> rows;
    std::size_t cols = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        const std::vector<std::string> fields = split_fields(body);
        if (cols == 0) {
            cols = fields.size();
            if (cols < 2 || cols > 6)
                throw parse_error(path, line_no, "expected 2-6 columns, got " +
                                                     std::to_string(cols));
        } else if (fields.size() != cols) {
            throw parse_error(path, line_no, "inconsistent column count");
        }
        std::vector<double> row;
        row.reserve(cols);
        for (const auto& f : fields) row.push_back(parse_double(f, path, line_no));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");

    // Layouts: x y | x y h | x y z h | x y r g b | x y z r g b.
    Eigen::Index spatial = 0, color = 0;
    switch (cols) {
        case 2: spatial = 2; color = 0; break;
        case 3: spatial = 2; color = 1; break;
        case 4: spatial = 3; color = 1; break;
        case 5: spatial = 2; color = 3; break;
        case 6: spatial = 3; color = 3; break;
    }
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd positions(n, spatial);
    Eigen::MatrixXd colors(n, color);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < spatial; ++c)
            positions(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        for (Eigen::Index c = 0; c < color; ++c)
            colors(r, c) =
                rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(spatial + c)];
    }
    return make_point_set(std::move(positions), normalize_colors(std::move(colors), path));
}

struct PlyProperty {
    std::string name;
    std::string type;
};

ColoredPointSet read_ply(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string line;
    std::size_t line_no = 0;

    auto next_line = [&]() {
        if (!std::getline(in, line)) throw parse_error(path, line_no, "unexpected end of file");
        ++line_no;
        return trim(line);
    };

    if (next_line() != "ply") throw parse_error(path, line_no, "not a PLY file");
    Eigen::Index vertex_count = -1;
    std::vector<PlyProperty> properties;
    bool in_vertex_element = false;
    bool ascii = false;
    while (true) {
        const std::string header = next_line();
        if (header == "end_header") break;
        std::istringstream hs(header);
        std::string keyword;
        hs >> keyword;
        if (keyword == "comment") continue;
        if (keyword == "format") {
            std::string fmt;
            hs >> fmt;
            ascii = fmt == "ascii";
        } else if (keyword == "element") {
            std::string name;
            Eigen::Index count = 0;
            hs >> name >> count;
            in_vertex_element = name == "vertex";
            if (in_vertex_element) vertex_count = count;
        } else if (keyword == "property" && in_vertex_element) {
            std::string type, name;
            hs >> type >> name;
            if (type == "list") throw parse_error(path, line_no, "list property in vertex element");
            properties.push_back({name, type});
        }
    }
    if (!ascii) throw std::runtime_error(path + ": only ASCII PLY is supported");
    if (vertex_count < 0) throw std::runtime_error(path + ": missing vertex element");

    auto find_property = [&](const std::string& name) -> Eigen::Index {
        for (std::size_t i = 0; i < properties.size(); ++i)
            if (properties[i].name == name) return static_cast<Eigen::Index>(i);
        return -1;
    };
    const Eigen::Index ix = find_property("x"), iy = find_property("y"), iz = find_property("z");
    if (ix < 0 || iy < 0 || iz < 0) throw std::runtime_error(path + ": PLY vertex needs x y z");
    const Eigen::Index ir = find_property("red"), ig = find_property("green"),
                       ib = find_property("blue");
    const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
    const bool byte_color = has_color && (properties[static_cast<std::size_t>(ir)].type == "uchar" ||
                                          properties[static_cast<std::size_t>(ir)].type == "uint8");

    Eigen::MatrixXd positions(vertex_count, 3);
    Eigen::MatrixXd colors(vertex_count, has_color ? 3 : 0);
    for (Eigen::Index v = 0; v < vertex_count; ++v) {
        const std::string row = next_line();
        const std::vector<std::string> fields = split_fields(row);
        if (fields.size() < properties.size())
            throw parse_error(path, line_no, "too few vertex values");
        auto value = [&](Eigen::Index idx) {
            return parse_double(fields[static_cast<std::size_t>(idx)], path, line_no);
        };
        positions(v, 0) = value(ix);
        positions(v, 1) = value(iy);
        positions(v, 2) = value(iz);
        if (has_color) {
            const double scale = byte_color ? 255.0 : 1.0;
            colors(v, 0) = value(ir) / scale;
            colors(v, 1) = value(ig) / scale;
            colors(v, 2) = value(ib) / scale;
        }
    }
    return make_point_set(std::move(positions), std::move(colors));
}

ColoredPointSet read_pcd(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> fields;
    std::vector<std::string> types;
    Eigen::Index points = -1;
    bool ascii = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        std::istringstream hs(body);
        std::string keyword;
        hs >> keyword;
        if (keyword == "FIELDS") {
            std::string f;
            while (hs >> f) fields.push_back(f);
        } else if (keyword == "TYPE") {
            std::string t;
            while (hs >> t) types.push_back(t);
        } else if (keyword == "POINTS") {
            hs >> points;
        } else if (keyword == "DATA") {
            std::string mode;
            hs >> mode;
            ascii = mode == "ascii";
            break;
        }
    }
    if (!ascii) throw std::runtime_error(path + ": only ASCII PCD is supported");
    if (points < 0) throw std::runtime_error(path + ": missing POINTS header");

    auto field_index = [&](const std::string& name) -> Eigen::Index {
        for (std::size_t i = 0; i < fields.size(); ++i)
            if (fields[i] == name) return static_cast<Eigen::Index>(i);
        return -1;
    };
    const Eigen::Index ix = field_index("x"), iy = field_index("y"), iz = field_index("z");
    if (ix < 0 || iy < 0 || iz < 0) throw std::runtime_error(path + ": PCD needs x y z fields");
    const Eigen::Index irgb = field_index("rgb");
    const bool rgb_is_unsigned =
        irgb >= 0 && static_cast<std::size_t>(irgb) < types.size() && types[static_cast<std::size_t>(irgb)] == "U";

    Eigen::MatrixXd positions(points, 3);
    Eigen::MatrixXd colors(points, irgb >= 0 ? 3 : 0);
    for (Eigen::Index p = 0; p < points; ++p) {
        if (!std::getline(in, line)) throw parse_error(path, line_no, "unexpected end of file");
        ++line_no;
        const std::vector<std::string> row = split_fields(trim(line));
        if (row.size() < fields.size()) throw parse_error(path, line_no, "too few values");
        positions(p, 0) = parse_double(row[static_cast<std::size_t>(ix)], path, line_no);
        positions(p, 1) = parse_double(row[static_cast<std::size_t>(iy)], path, line_no);
        positions(p, 2) = parse_double(row[static_cast<std::size_t>(iz)], path, line_no);
        if (irgb >= 0) {
            const std::string& token = row[static_cast<std::size_t>(irgb)];
            std::uint32_t packed = 0;
            if (rgb_is_unsigned) {
                packed = static_cast<std::uint32_t>(
                    std::strtoul(token.c_str(), nullptr, 10));
            } else {
                // The float's bit pattern is the packed 0x00RRGGBB value.
                // Parsed with strtof directly: packed colors are subnormal
                // floats, which stof misreports as out of range.
                char* end = nullptr;
                const float f = std::strtof(token.c_str(), &end);
                if (end != token.c_str() + token.size())
                    throw parse_error(path, line_no, "unparseable rgb '" + token + "'");
                packed = std::bit_cast<std::uint32_t>(f);
            }
            colors(p, 0) = static_cast<double>((packed >> 16) & 0xFF) / 255.0;
            colors(p, 1) = static_cast<double>((packed >> 8) & 0xFF) / 255.0;
            colors(p, 2) = static_cast<double>(packed & 0xFF) / 255.0;
        }
    }
    return make_point_set(std::move(positions), std::move(colors));
}

void write_csv(const ColoredPointSet& set, const std::string& path) {
    std::ostringstream out;
    for (Eigen::Index r = 0; r < set.count(); ++r) {
        for (Eigen::Index c = 0; c < set.spatial_dims(); ++c) {
            if (c) out << ',';
            out << format_double(set.positions(r, c));
        }
        for (Eigen::Index c = 0; c < set.color_dims(); ++c)
            out << ',' << format_double(set.colors(r, c));
        out << '\n';
    }
    write_text_atomic(path, out.str());
}

void write_ply(const ColoredPointSet& set, const std::string& path) {
    if (set.spatial_dims() != 3) throw std::invalid_argument("PLY requires 3D");
    if (set.color_dims() != 0 && set.color_dims() != 3)
        throw std::invalid_argument("PLY colors must be RGB");
    std::ostringstream out;
    out << "ply\nformat ascii 1.0\nelement vertex " << set.count() << "\n"
        << "property double x\nproperty double y\nproperty double z\n";
    if (set.color_dims() == 3)
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";
    for (Eigen::Index r = 0; r < set.count(); ++r) {
        out << format_double(set.positions(r, 0)) << ' ' << format_double(set.positions(r, 1))
            << ' ' << format_double(set.positions(r, 2));
        if (set.color_dims() == 3)
            for (Eigen::Index c = 0; c < 3; ++c)
                out << ' ' << static_cast<int>(std::lround(set.colors(r, c) * 255.0));
        out << '\n';
    }
    write_text_atomic(path, out.str());
}

void write_pcd(const ColoredPointSet& set, const std::string& path) {
    if (set.spatial_dims() != 3) throw std::invalid_argument("PCD requires 3D");
    if (set.color_dims() != 0 && set.color_dims() != 3)
        throw std::invalid_argument("PCD colors must be RGB");
    const bool rgb = set.color_dims() == 3;
    std::ostringstream out;
    out << "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\n"
        << "FIELDS x y z" << (rgb ? " rgb" : "") << "\n"
        << "SIZE 4 4 4" << (rgb ? " 4" : "") << "\n"
        << "TYPE F F F" << (rgb ? " F" : "") << "\n"
        << "COUNT 1 1 1" << (rgb ? " 1" : "") << "\n"
        << "WIDTH " << set.count() << "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\n"
        << "POINTS " << set.count() << "\nDATA ascii\n";
    char buf[64];
    for (Eigen::Index r = 0; r < set.count(); ++r) {
        for (Eigen::Index c = 0; c < 3; ++c) {
            std::snprintf(buf, sizeof buf, "%.9g", set.positions(r, c));
            out << (c ? " " : "") << buf;
        }
        if (rgb) {
            std::uint32_t packed = 0;
            for (Eigen::Index c = 0; c < 3; ++c)
                packed = (packed << 8) |
                         static_cast<std::uint32_t>(std::lround(set.colors(r, c) * 255.0));
            const float f = std::bit_cast<float>(packed);
            std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(f));
            out << ' ' << buf;
        }
        out << '\n';
    }
    write_text_atomic(path, out.str());
}

bool parse_bool(const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw std::invalid_argument("expected a boolean, got '" + value + "'");
}

// key=value lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos) throw parse_error(path, line_no, "expected key=value");
        entries.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
    }
    return entries;
}

}  // namespace

ColoredPointSet read_point_cloud(const std::string& path, CloudFormat hint) {
    const CloudFormat format = hint == CloudFormat::auto_detect ? detect_format(path) : hint;
    switch (format) {
        case CloudFormat::csv: return read_csv(path);
        case CloudFormat::ply: return read_ply(path);
        case CloudFormat::pcd: return read_pcd(path);
        default: throw std::invalid_argument("read_point_cloud: bad format");
    }
}

void write_point_cloud(const ColoredPointSet& set, const std::string& path, CloudFormat format) {
    require_valid(set, "write_point_cloud");
    if (format == CloudFormat::auto_detect) format = detect_format(path);
    switch (format) {
        case CloudFormat::csv: write_csv(set, path); break;
        case CloudFormat::ply: write_ply(set, path); break;
        case CloudFormat::pcd: write_pcd(set, path); break;
        default: throw std::invalid_argument("write_point_cloud: bad format");
    }
}

Eigen::MatrixXd rgb_to_hue(const Eigen::MatrixXd& rgb) {
    if (rgb.cols() != 3) throw std::invalid_argument("rgb_to_hue: expected 3 columns");
    Eigen::MatrixXd hue(rgb.rows(), 1);
    for (Eigen::Index i = 0; i < rgb.rows(); ++i) {
        const double r = rgb(i, 0), g = rgb(i, 1), b = rgb(i, 2);
        const double hi = std::max({r, g, b});
        const double lo = std::min({r, g, b});
        const double delta = hi - lo;
        double h = 0.0;
        if (delta > 0.0) {
            if (hi == r)
                h = std::fmod((g - b) / delta, 6.0);
            else if (hi == g)
                h = (b - r) / delta + 2.0;
            else
                h = (r - g) / delta + 4.0;
            h /= 6.0;
            if (h < 0.0) h += 1.0;
        }
        hue(i, 0) = h;
    }
    return hue;
}

Eigen::MatrixXd hue_to_rgb(const Eigen::MatrixXd& hue) {
    if (hue.cols() != 1) throw std::invalid_argument("hue_to_rgb: expected 1 column");
    Eigen::MatrixXd rgb(hue.rows(), 3);
    for (Eigen::Index i = 0; i < hue.rows(); ++i) {
        const double h6 = std::fmod(std::fmod(hue(i, 0), 1.0) + 1.0, 1.0) * 6.0;
        const int sector = static_cast<int>(h6) % 6;
        const double f = h6 - std::floor(h6);
        double r = 0, g = 0, b = 0;
        switch (sector) {
            case 0: r = 1; g = f; b = 0; break;
            case 1: r = 1 - f; g = 1; b = 0; break;
            case 2: r = 0; g = 1; b = f; break;
            case 3: r = 0; g = 1 - f; b = 1; break;
            case 4: r = f; g = 0; b = 1; break;
            default: r = 1; g = 0; b = 1 - f; break;
        }
        rgb(i, 0) = r;
        rgb(i, 1) = g;
        rgb(i, 2) = b;
    }
    return rgb;
}

ColoredPointSet downsample_uniform(const ColoredPointSet& set, Eigen::Index target,
                                   std::uint64_t seed) {
    require_valid(set, "downsample_uniform");
    if (target <= 0 || target > set.count())
        throw std::invalid_argument("downsample_uniform: target out of range");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(set.count()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    for (Eigen::Index i = set.count() - 1; i > 0; --i) {
        std::uniform_int_distribution<Eigen::Index> pick(0, i);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<Eigen::Index> keep(order.begin(), order.begin() + target);
    std::sort(keep.begin(), keep.end());
    ColoredPointSet out;
    out.positions.resize(target, set.spatial_dims());
    out.colors.resize(target, set.color_dims());
    for (Eigen::Index i = 0; i < target; ++i) {
        out.positions.row(i) = set.positions.row(keep[static_cast<std::size_t>(i)]);
        if (set.color_dims() > 0)
            out.colors.row(i) = set.colors.row(keep[static_cast<std::size_t>(i)]);
    }
    return out;
}

ColoredPointSet downsample_voxel(const ColoredPointSet& set, double cell_size) {
    require_valid(set, "downsample_voxel");
    if (!(cell_size > 0.0)) throw std::invalid_argument("downsample_voxel: cell size must be positive");

    struct Cell {
        Eigen::VectorXd position_sum;
        Eigen::VectorXd color_sum;
        Eigen::Index count = 0;
    };
    std::unordered_map<std::string, std::size_t> index;
    std::vector<Cell> cells;  // first-occurrence order
    for (Eigen::Index i = 0; i < set.count(); ++i) {
        std::ostringstream key;
        for (Eigen::Index d = 0; d < set.spatial_dims(); ++d)
            key << static_cast<long long>(std::floor(set.positions(i, d) / cell_size)) << ',';
        auto [it, inserted] = index.try_emplace(key.str(), cells.size());
        if (inserted)
            cells.push_back(Cell{Eigen::VectorXd::Zero(set.spatial_dims()),
                                 Eigen::VectorXd::Zero(set.color_dims()), 0});
        Cell& cell = cells[it->second];
        cell.position_sum += set.positions.row(i).transpose();
        if (set.color_dims() > 0) cell.color_sum += set.colors.row(i).transpose();
        ++cell.count;
    }

    ColoredPointSet out;
    out.positions.resize(static_cast<Eigen::Index>(cells.size()), set.spatial_dims());
    out.colors.resize(static_cast<Eigen::Index>(cells.size()), set.color_dims());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const double inv = 1.0 / static_cast<double>(cells[c].count);
        out.positions.row(static_cast<Eigen::Index>(c)) = cells[c].position_sum.transpose() * inv;
        if (set.color_dims() > 0)
            out.colors.row(static_cast<Eigen::Index>(c)) = cells[c].color_sum.transpose() * inv;
    }
    return out;
}

void apply_config_entry(RegistrationConfig& config, const std::string& key,
                        const std::string& value) {
    try {
        if (key == "alpha") config.alpha = std::stod(value);
        else if (key == "beta") config.beta = std::stod(value);
        else if (key == "lambda") config.lambda = std::stod(value);
        else if (key == "w_shape") config.w_shape = std::stod(value);
        else if (key == "w_color") config.w_color = std::stod(value);
        else if (key == "sigma_color") {
            if (value == "auto")
                config.sigma_color.reset();
            else
                config.sigma_color = std::stod(value);
        } else if (key == "color_outlier_term") config.color_outlier_term = parse_bool(value);
        else if (key == "max_iterations") config.max_iterations = std::stoi(value);
        else if (key == "tolerance") config.tolerance = std::stod(value);
        else if (key == "sigma_floor") config.sigma_floor = std::stod(value);
        else if (key == "prenormalize") config.prenormalize = parse_bool(value);
        else throw std::invalid_argument("unknown config key '" + key + "'");
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("bad value for config key '" + key + "': '" + value + "'");
    }
}

RegistrationConfig load_config(const std::string& path) {
    RegistrationConfig config;
    for (const auto& [key, value] : read_key_values(path)) apply_config_entry(config, key, value);
    require_valid(config);
    return config;
}

void save_config(const RegistrationConfig& config, const std::string& path) {
    std::ostringstream out;
    out << "alpha=" << format_double(config.alpha) << '\n'
        << "beta=" << format_double(config.beta) << '\n'
        << "lambda=" << format_double(config.lambda) << '\n'
        << "w_shape=" << format_double(config.w_shape) << '\n'
        << "w_color=" << format_double(config.w_color) << '\n'
        << "sigma_color="
        << (config.sigma_color ? format_double(*config.sigma_color) : std::string("auto")) << '\n'
        << "color_outlier_term=" << (config.color_outlier_term ? "true" : "false") << '\n'
        << "max_iterations=" << config.max_iterations << '\n'
        << "tolerance=" << format_double(config.tolerance) << '\n'
        << "sigma_floor=" << format_double(config.sigma_floor) << '\n'
        << "prenormalize=" << (config.prenormalize ? "true" : "false") << '\n';
    write_text_atomic(path, out.str());
}

CorrespondenceGroundTruth read_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    CorrespondenceGroundTruth truth;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        const std::vector<std::string> fields = split_fields(body);
        if (fields.size() != 2) throw parse_error(path, line_no, "expected two indices");
        truth.pairs.emplace_back(
            static_cast<Eigen::Index>(parse_double(fields[0], path, line_no)),
            static_cast<Eigen::Index>(parse_double(fields[1], path, line_no)));
    }
    return truth;
}

void write_truth(const CorrespondenceGroundTruth& truth, const std::string& path) {
    std::ostringstream out;
    out << "# model_index,anchor_index\n";
    for (const auto& [model_idx, anchor_idx] : truth.pairs)
        out << model_idx << ',' << anchor_idx << '\n';
    write_text_atomic(path, out.str());
}

ExperimentSpec load_experiment_spec(const std::string& path) {
    ExperimentSpec spec;
    for (const auto& [key, value] : read_key_values(path)) {
        try {
            if (key == "seed") spec.seed = std::stoull(value);
            else if (key == "missing_fraction") spec.missing_fraction = std::stod(value);
            else if (key == "removal_side") {
                if (value == "anchor") spec.removal_side = RemovalSide::anchor;
                else if (value == "model") spec.removal_side = RemovalSide::model;
                else throw std::invalid_argument("removal_side must be anchor or model");
            } else if (key == "color_snr_db") {
                if (value == "none") spec.color_snr_db.reset();
                else spec.color_snr_db = std::stod(value);
            } else if (key == "color_outlier_fraction") {
                spec.color_outlier_fraction = std::stod(value);
            } else if (key == "warp_control_points") {
                spec.warp_recipe.control_points = std::stoi(value);
            } else if (key == "warp_amplitude") {
                spec.warp_recipe.amplitude = std::stod(value);
            } else if (key == "warp_radius") {
                spec.warp_recipe.radius = std::stod(value);
            } else {
                throw std::invalid_argument("unknown experiment key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("bad value for experiment key '" + key + "'");
        }
    }
    return spec;
}

std::vector<ComparisonRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::vector<ComparisonRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        std::istringstream row(body);
        ComparisonRecord r;
        if (!(row >> r.spec_hash >> r.seed >> r.method >> r.rms >> r.iterations >>
              r.milliseconds))
            throw parse_error(path, line_no, "bad record row");
        records.push_back(std::move(r));
    }
    return records;
}

void append_records(const std::vector<ComparisonRecord>& records, const std::string& path) {
    std::vector<ComparisonRecord> all;
    if (fs::exists(path)) all = read_records(path);
    all.insert(all.end(), records.begin(), records.end());
    std::ostringstream out;
    out << "# spec_hash\tseed\tmethod\trms\titerations\tmilliseconds\n";
    for (const auto& r : all)
        out << r.spec_hash << '\t' << r.seed << '\t' << r.method << '\t' << format_double(r.rms)
            << '\t' << r.iterations << '\t' << format_double(r.milliseconds) << '\n';
    write_text_atomic(path, out.str());
}

void write_flow_csv(const std::vector<FlowArrow>& arrows, const std::string& path) {
    std::ostringstream out;
    out << "ox,oy,oz,dx,dy,dz\n";
    for (const auto& arrow : arrows) {
        double o[3] = {0, 0, 0}, d[3] = {0, 0, 0};
        for (Eigen::Index c = 0; c < arrow.origin.size() && c < 3; ++c) {
            o[c] = arrow.origin(c);
            d[c] = arrow.displacement(c);
        }
        out << format_double(o[0]) << ',' << format_double(o[1]) << ',' << format_double(o[2])
            << ',' << format_double(d[0]) << ',' << format_double(d[1]) << ','
            << format_double(d[2]) << '\n';
    }
    write_text_atomic(path, out.str());
}

void write_text_atomic(const std::string& path, const std::string& contents) {
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(path + ": unwritable path");
        out << contents;
        if (!out) throw std::runtime_error(path + ": write failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error(path + ": rename failed: " + ec.message());
    }
}

}  // namespace ccpd
