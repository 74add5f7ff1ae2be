#include "eggsep/image_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace eggsep {

void save_pgm(const Tensor& t, const std::string& path) {
    if (t.rank() != 2) throw std::invalid_argument("save_pgm: tensor is not 2-D");
    for (double v : t.data)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("save_pgm: value out of [0,1]");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << "P5\n" << t.cols() << ' ' << t.rows() << "\n255\n";
    for (double v : t.data) {
        const unsigned byte = std::min(255u, static_cast<unsigned>(std::floor(v * 255.0 + 0.5)));
        os.put(static_cast<char>(byte));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

namespace {

// next non-comment token in a PNM header
std::string next_token(std::istream& is) {
    std::string tok;
    int c;
    while ((c = is.get()) != EOF) {
        if (c == '#') {
            while ((c = is.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

}  // namespace

Tensor load_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    if (next_token(is) != "P5") throw std::runtime_error("load_pgm: not a binary P5 file: " + path);
    std::size_t w = 0, h = 0, maxval = 0;
    try {
        w = std::stoul(next_token(is));
        h = std::stoul(next_token(is));
        maxval = std::stoul(next_token(is));
    } catch (const std::exception&) {
        throw std::runtime_error("load_pgm: malformed header in " + path);
    }
    if (w == 0 || h == 0 || maxval != 255)
        throw std::runtime_error("load_pgm: unsupported header in " + path);
    Tensor t({h, w});
    for (double& v : t.data) {
        const int c = is.get();
        if (c == EOF) throw std::runtime_error("load_pgm: truncated pixel data in " + path);
        v = static_cast<double>(c) / 255.0;
    }
    return t;
}

}  // namespace eggsep
