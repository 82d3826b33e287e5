#include "segarena/image_io.hpp"

#include <fstream>
#include <stdexcept>
#include <vector>

namespace segarena {
namespace {

void skip_comments(std::istream& in) {
  in >> std::ws;
  while (in.peek() == '#') {
    std::string line;
    std::getline(in, line);
    in >> std::ws;
  }
}

struct PnmHeader {
  int width = 0;
  int height = 0;
};

PnmHeader read_header(std::istream& in, const char* magic,
                      const std::filesystem::path& path) {
  std::string tag;
  in >> tag;
  if (tag != magic) {
    throw std::runtime_error("bad magic in " + path.string() + ": " + tag);
  }
  PnmHeader h;
  int maxval = 0;
  skip_comments(in);
  in >> h.width;
  skip_comments(in);
  in >> h.height;
  skip_comments(in);
  in >> maxval;
  if (!in || h.width <= 0 || h.height <= 0 || maxval != 255) {
    throw std::runtime_error("unsupported PNM header in " + path.string());
  }
  in.get();  // single whitespace before raster
  return h;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

}  // namespace

void write_mask_pgm(const MaskGrid& mask, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "P5\n" << mask.cols() << " " << mask.rows() << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(mask.cols()));
  for (Eigen::Index y = 0; y < mask.rows(); ++y) {
    for (Eigen::Index x = 0; x < mask.cols(); ++x) {
      row[static_cast<std::size_t>(x)] = mask(y, x) ? 255 : 0;
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
}

MaskGrid read_mask_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const PnmHeader h = read_header(in, "P5", path);
  MaskGrid mask(h.height, h.width);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(h.width));
  for (int y = 0; y < h.height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size()));
    if (!in) throw std::runtime_error("truncated PGM " + path.string());
    for (int x = 0; x < h.width; ++x) {
      mask(y, x) = row[static_cast<std::size_t>(x)] >= 128;
    }
  }
  return mask;
}

void write_image_ppm(const Image& image, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width()) * 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      row[static_cast<std::size_t>(3 * x) + 0] = to_byte(image.r(y, x));
      row[static_cast<std::size_t>(3 * x) + 1] = to_byte(image.g(y, x));
      row[static_cast<std::size_t>(3 * x) + 2] = to_byte(image.b(y, x));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
}

Image read_image_ppm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const PnmHeader h = read_header(in, "P6", path);
  Image image(h.width, h.height);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(h.width) * 3);
  for (int y = 0; y < h.height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size()));
    if (!in) throw std::runtime_error("truncated PPM " + path.string());
    for (int x = 0; x < h.width; ++x) {
      image.r(y, x) = from_byte(row[static_cast<std::size_t>(3 * x) + 0]);
      image.g(y, x) = from_byte(row[static_cast<std::size_t>(3 * x) + 1]);
      image.b(y, x) = from_byte(row[static_cast<std::size_t>(3 * x) + 2]);
    }
  }
  return image;
}

void quantize_image(Image& image) {
  for (int c = 0; c < 3; ++c) {
    Plane& p = image.channel(c);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      p.data()[i] = from_byte(to_byte(p.data()[i]));
    }
  }
}

}  // namespace segarena
