#include "msse/image.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

namespace msse {

namespace {

// PPM headers allow '#' comments anywhere whitespace may appear.
int read_header_int(std::istream &in, const std::string &path) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c))
        throw std::runtime_error("load_ppm: malformed header in " + path);
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = in.get();
    }
    if (c != EOF) in.unget();
    return value;
}

} // namespace

ImageU8 load_ppm(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_ppm: cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '6')
        throw std::runtime_error("load_ppm: " + path + " is not binary P6");
    const int w = read_header_int(in, path);
    const int h = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    if (w < 1 || h < 1) throw std::runtime_error("load_ppm: bad dimensions in " + path);
    if (maxval != 255)
        throw std::runtime_error("load_ppm: " + path + " has maxval " + std::to_string(maxval) +
                                 ", only 255 is supported");
    in.get(); // single whitespace after maxval
    ImageU8 img(w, h);
    in.read(reinterpret_cast<char *>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw std::runtime_error("load_ppm: truncated pixel payload in " + path);
    return img;
}

void save_ppm(const ImageU8 &image, const std::string &path) {
    if (!image.valid()) throw std::invalid_argument("save_ppm: invalid image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_ppm: cannot open " + path + " for writing");
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char *>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw std::runtime_error("save_ppm: short write to " + path);
}

} // namespace msse
