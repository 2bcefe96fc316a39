#include "icf/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace icf {

namespace {

constexpr char kMagic[4] = {'I', 'C', 'F', 'T'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kDtypeF32 = 1;

static_assert(std::endian::native == std::endian::little,
              "tensor file writer assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool get(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return in.gcount() == sizeof(T);
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t) {
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, uint32_t{4});
    put(out, static_cast<uint64_t>(t.shape.n));
    put(out, static_cast<uint64_t>(t.shape.c));
    put(out, static_cast<uint64_t>(t.shape.h));
    put(out, static_cast<uint64_t>(t.shape.w));
    put(out, kDtypeF32);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

void write_tensor(const std::string& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_tensor: cannot open " + path);
    write_tensor(out, t);
    if (!out) throw std::runtime_error("write_tensor: write failed on " + path);
}

Tensor read_tensor(std::istream& in, const std::string& origin) {
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw std::invalid_argument("read_tensor: bad magic in " + origin);
    uint32_t version = 0, ndim = 0;
    if (!get(in, version)) throw std::invalid_argument("read_tensor: truncated header in " + origin);
    if (version != kVersion)
        throw std::invalid_argument("read_tensor: unsupported version " + std::to_string(version) +
                                    " in " + origin);
    if (!get(in, ndim)) throw std::invalid_argument("read_tensor: truncated header in " + origin);
    if (ndim != 4)
        throw std::invalid_argument("read_tensor: ndim must be 4, got " + std::to_string(ndim) +
                                    " in " + origin);
    uint64_t dims[4];
    for (auto& d : dims)
        if (!get(in, d)) throw std::invalid_argument("read_tensor: truncated header in " + origin);
    uint8_t dtype = 0;
    if (!get(in, dtype)) throw std::invalid_argument("read_tensor: truncated header in " + origin);
    if (dtype != kDtypeF32)
        throw std::invalid_argument("read_tensor: unsupported dtype " + std::to_string(dtype) +
                                    " in " + origin);
    uint64_t total = 1;
    for (auto d : dims) {
        if (d < 1 || d > (uint64_t{1} << 31))
            throw std::invalid_argument("read_tensor: implausible dim in " + origin);
        total *= d;
        if (total > (uint64_t{1} << 31))
            throw std::invalid_argument("read_tensor: implausible tensor size in " + origin);
    }

    Tensor t({static_cast<int64_t>(dims[0]), static_cast<int64_t>(dims[1]),
              static_cast<int64_t>(dims[2]), static_cast<int64_t>(dims[3])});
    const std::streamsize want = static_cast<std::streamsize>(t.data.size() * sizeof(float));
    in.read(reinterpret_cast<char*>(t.data.data()), want);
    if (in.gcount() != want)
        throw std::invalid_argument("read_tensor: payload length mismatch in " + origin);
    in.peek();
    if (!in.eof())
        throw std::invalid_argument("read_tensor: payload length mismatch in " + origin +
                                    " (trailing bytes)");
    return t;
}

Tensor read_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("read_tensor: cannot open " + path);
    return read_tensor(in, path);
}

// ---- images --------------------------------------------------------------

namespace {

// Reads one whitespace/comment-delimited PNM header token.
std::string pnm_token(std::istream& in, const std::string& path) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw std::invalid_argument("read_image: truncated header in " + path);
    return tok;
}

int64_t pnm_int(std::istream& in, const std::string& path) {
    const std::string tok = pnm_token(in, path);
    try {
        return std::stoll(tok);
    } catch (...) {
        throw std::invalid_argument("read_image: bad header field '" + tok + "' in " + path);
    }
}

struct PnmHeader {
    bool color = false;
    int64_t w = 0, h = 0;
};

PnmHeader read_pnm_header(std::istream& in, const std::string& path) {
    const std::string magic = pnm_token(in, path);
    if (magic != "P5" && magic != "P6")
        throw std::invalid_argument("read_image: unsupported format '" + magic + "' in " + path +
                                    " (binary P5/P6 only)");
    PnmHeader hd;
    hd.color = magic == "P6";
    hd.w = pnm_int(in, path);
    hd.h = pnm_int(in, path);
    const int64_t maxval = pnm_int(in, path);
    if (hd.w < 1 || hd.h < 1)
        throw std::invalid_argument("read_image: bad dimensions in " + path);
    if (maxval != 255)
        throw std::invalid_argument("read_image: maxval must be 255, got " +
                                    std::to_string(maxval) + " in " + path);
    return hd;
}

std::vector<uint8_t> read_pnm_payload(std::istream& in, int64_t count, const std::string& path) {
    std::vector<uint8_t> bytes(static_cast<size_t>(count));
    in.read(reinterpret_cast<char*>(bytes.data()), count);
    if (in.gcount() != count)
        throw std::invalid_argument("read_image: truncated pixel data in " + path);
    return bytes;
}

constexpr double kLumR = 0.299, kLumG = 0.587, kLumB = 0.114;

}  // namespace

RgbImage read_image_rgb(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("read_image: cannot open " + path);
    const PnmHeader hd = read_pnm_header(in, path);
    RgbImage img;
    img.h = hd.h;
    img.w = hd.w;
    const int64_t count = hd.h * hd.w;
    img.r.resize(static_cast<size_t>(count));
    img.g.resize(static_cast<size_t>(count));
    img.b.resize(static_cast<size_t>(count));
    if (hd.color) {
        const auto bytes = read_pnm_payload(in, count * 3, path);
        for (int64_t i = 0; i < count; ++i) {
            img.r[static_cast<size_t>(i)] = bytes[static_cast<size_t>(3 * i)] / 255.0;
            img.g[static_cast<size_t>(i)] = bytes[static_cast<size_t>(3 * i + 1)] / 255.0;
            img.b[static_cast<size_t>(i)] = bytes[static_cast<size_t>(3 * i + 2)] / 255.0;
        }
    } else {
        const auto bytes = read_pnm_payload(in, count, path);
        for (int64_t i = 0; i < count; ++i) {
            const double v = bytes[static_cast<size_t>(i)] / 255.0;
            img.r[static_cast<size_t>(i)] = v;
            img.g[static_cast<size_t>(i)] = v;
            img.b[static_cast<size_t>(i)] = v;
        }
    }
    return img;
}

GrayImage to_gray(const RgbImage& img) {
    GrayImage out(img.h, img.w);
    for (size_t i = 0; i < out.pix.size(); ++i)
        out.pix[i] = kLumR * img.r[i] + kLumG * img.g[i] + kLumB * img.b[i];
    return out;
}

GrayImage read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("read_image: cannot open " + path);
    const PnmHeader hd = read_pnm_header(in, path);
    GrayImage img(hd.h, hd.w);
    const int64_t count = hd.h * hd.w;
    if (hd.color) {
        const auto bytes = read_pnm_payload(in, count * 3, path);
        for (int64_t i = 0; i < count; ++i)
            img.pix[static_cast<size_t>(i)] =
                (kLumR * bytes[static_cast<size_t>(3 * i)] +
                 kLumG * bytes[static_cast<size_t>(3 * i + 1)] +
                 kLumB * bytes[static_cast<size_t>(3 * i + 2)]) /
                255.0;
    } else {
        const auto bytes = read_pnm_payload(in, count, path);
        for (int64_t i = 0; i < count; ++i)
            img.pix[static_cast<size_t>(i)] = bytes[static_cast<size_t>(i)] / 255.0;
    }
    return reflect_pad_to_even(img);
}

void write_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    out << "P5\n" << img.w << " " << img.h << "\n255\n";
    for (double v : img.pix) {
        const double clamped = std::min(1.0, std::max(0.0, v));
        out.put(static_cast<char>(std::lround(clamped * 255.0)));
    }
    if (!out) throw std::runtime_error("write_pgm: write failed on " + path);
}

// ---- config documents ------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const int64_t v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (...) {
        throw std::invalid_argument("config: bad integer '" + value + "' for key " + key);
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw std::invalid_argument("config: bad boolean '" + value + "' for key " + key);
}

std::vector<int64_t> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int64_t> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
    if (out.empty()) throw std::invalid_argument("config: empty list for key " + key);
    return out;
}

}  // namespace

FusionConfig parse_config(std::istream& in) {
    FusionConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "resolution") {
            cfg.resolution = static_cast<int>(parse_int(key, value));
        } else if (key == "levels") {
            cfg.levels.clear();
            for (int64_t v : parse_int_list(key, value)) cfg.levels.push_back(static_cast<int>(v));
        } else if (key == "c_rgb") {
            cfg.c_rgb = parse_int_list(key, value);
        } else if (key == "c_ir") {
            cfg.c_ir = parse_int_list(key, value);
        } else if (key == "ccsg_shuffle_groups") {
            cfg.ccsg_shuffle_groups = parse_int(key, value);
        } else if (key == "ccsg_conv_groups") {
            cfg.ccsg_conv_groups = parse_int(key, value);
        } else if (key == "msfd_csp_shuffle_groups") {
            cfg.msfd_csp_shuffle_groups = parse_int(key, value);
        } else if (key == "msfd_csp_groups") {
            cfg.msfd_csp_groups = parse_int(key, value);
        } else if (key == "tail_csp_shuffle_groups") {
            cfg.tail_csp_shuffle_groups = parse_int(key, value);
        } else if (key == "tail_csp_groups") {
            cfg.tail_csp_groups = parse_int(key, value);
        } else if (key == "bias") {
            cfg.bias = parse_bool(key, value);
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "' on line " +
                                        std::to_string(lineno));
        }
    }
    cfg.validate();
    return cfg;
}

FusionConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    return parse_config(in);
}

// ---- report documents --------------------------------------------------

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void ReportDoc::add(const std::string& key, const std::string& value) {
    entries.emplace_back(key, value);
}

void ReportDoc::add(const std::string& key, int64_t value) {
    entries.emplace_back(key, std::to_string(value));
}

void ReportDoc::add(const std::string& key, double value) {
    entries.emplace_back(key, format_double(value));
}

std::string ReportDoc::render() const {
    std::string out = "schema: icfusion-report-v1\n";
    out += "tool: " + tool + "\n";
    for (const auto& [k, v] : entries) out += k + ": " + v + "\n";
    return out;
}

// ---- parameter files ----------------------------------------------------

namespace {

Tensor bias_tensor(const std::vector<float>& bias) {
    Tensor t({1, static_cast<int64_t>(bias.size()), 1, 1});
    std::copy(bias.begin(), bias.end(), t.data.begin());
    return t;
}

}  // namespace

void write_params_dir(const std::string& dir, const FusionConfig& cfg, Seed seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto convs = enumerate_convs(cfg);
    for (size_t i = 0; i < convs.size(); ++i) {
        const ConvWeights w = init_conv_weights(convs[i].spec, sub_seed(seed, i));
        write_tensor((fs::path(dir) / (convs[i].name + ".weight.icft")).string(), w.weight);
        if (!w.bias.empty())
            write_tensor((fs::path(dir) / (convs[i].name + ".bias.icft")).string(),
                         bias_tensor(w.bias));
    }
}

FusionParams read_params_dir(const std::string& dir, const FusionConfig& cfg) {
    namespace fs = std::filesystem;
    return build_fusion_params(cfg, [&](size_t, const NamedConv& nc) {
        ConvWeights w;
        w.weight = read_tensor((fs::path(dir) / (nc.name + ".weight.icft")).string());
        if (nc.spec.has_bias) {
            const Tensor b = read_tensor((fs::path(dir) / (nc.name + ".bias.icft")).string());
            if (b.shape.c != nc.spec.c_out || b.shape.n != 1 || b.shape.h != 1 || b.shape.w != 1)
                throw std::invalid_argument("params: bias tensor for " + nc.name +
                                            " has shape " + b.shape.str());
            w.bias.assign(b.data.begin(), b.data.end());
        }
        return w;
    });
}

}  // namespace icf
