#include "stablerec/data.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace stablerec {

namespace {

class HeaderScanner {
public:
  explicit HeaderScanner(const std::string& bytes) : b_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      const unsigned char ch = static_cast<unsigned char>(b_[pos_]);
      if (std::isspace(ch)) {
        ++pos_;
      } else if (ch == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= b_.size()) throw ParseError(std::string("PGM: unexpected end of file reading ") + what, pos_);
    if (!std::isdigit(static_cast<unsigned char>(b_[pos_])))
      throw ParseError(std::string("PGM: expected a decimal ") + what, pos_);
    unsigned long v = 0;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      v = v * 10 + static_cast<unsigned long>(b_[pos_] - '0');
      if (v > 0xFFFFFFFFUL) throw ParseError(std::string("PGM: ") + what + " too large", pos_);
      ++pos_;
    }
    return v;
  }

  std::size_t& pos() { return pos_; }

private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

} // namespace

GrayImage parse_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw ParseError("PGM: missing P2/P5 magic", 0);
  const bool ascii = bytes[1] == '2';
  HeaderScanner scan(bytes);
  scan.pos() = 2;
  const unsigned long width = scan.number("width");
  const unsigned long height = scan.number("height");
  const std::size_t maxval_pos = scan.pos();
  const unsigned long maxval = scan.number("maxval");
  if (width == 0 || height == 0) throw ParseError("PGM: zero image dimension", maxval_pos);
  if (maxval == 0 || maxval > 65535) throw ParseError("PGM: maxval must be in 1..65535", maxval_pos);

  const Shape shape{height, width};
  Vector px(shape.size());
  const double scale = 1.0 / static_cast<double>(maxval);
  if (ascii) {
    for (double& v : px) {
      const std::size_t at = scan.pos();
      const unsigned long level = scan.number("pixel value");
      if (level > maxval) throw ParseError("PGM: pixel value exceeds maxval", at);
      v = static_cast<double>(level) * scale;
    }
  } else {
    std::size_t pos = scan.pos();
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
      throw ParseError("PGM: expected a single whitespace byte before raster data", pos);
    ++pos;
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    const std::size_t need = shape.size() * bpp;
    if (bytes.size() - pos < need) throw ParseError("PGM: truncated raster data", bytes.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
      unsigned long level = static_cast<unsigned char>(bytes[pos + i * bpp]);
      if (bpp == 2) level = (level << 8) | static_cast<unsigned char>(bytes[pos + i * bpp + 1]);
      if (level > maxval) throw ParseError("PGM: pixel value exceeds maxval", pos + i * bpp);
      px[i] = static_cast<double>(level) * scale;
    }
  }
  return make_image(shape, std::move(px));
}

GrayImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_pgm(std::string(std::istreambuf_iterator<char>(in), {}));
}

std::string encode_pgm(const GrayImage& image, int maxval, bool ascii) {
  if (maxval < 1 || maxval > 65535) throw ParameterError("PGM maxval must be in 1..65535");
  require_size(image.pixels, image.shape.size(), "encode_pgm");
  std::string out = std::string(ascii ? "P2" : "P5") + "\n" + std::to_string(image.shape.width) + " " +
                    std::to_string(image.shape.height) + "\n" + std::to_string(maxval) + "\n";
  auto level = [&](double v) {
    const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<unsigned>(std::lround(clamped * maxval));
  };
  if (ascii) {
    for (std::size_t r = 0; r < image.shape.height; ++r) {
      for (std::size_t c = 0; c < image.shape.width; ++c) {
        if (c) out += ' ';
        out += std::to_string(level(image.at(r, c)));
      }
      out += '\n';
    }
  } else {
    for (double v : image.pixels) {
      const unsigned l = level(v);
      if (maxval >= 256) out.push_back(static_cast<char>((l >> 8) & 0xFF));
      out.push_back(static_cast<char>(l & 0xFF));
    }
  }
  return out;
}

void save_pgm(const GrayImage& image, const std::string& path, int maxval, bool ascii) {
  const std::string bytes = encode_pgm(image, maxval, ascii);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

} // namespace stablerec
