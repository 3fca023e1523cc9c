/**
 * Copyright 2026 lmkit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "lmkit/image.hpp"

#include <fstream>
#include <string>

#include "lmkit/errors.hpp"

namespace lmkit {
namespace {

// Skips whitespace and '#' comment lines between header tokens.
int next_header_int(std::istream& in, const std::string& path) {
  while (true) {
    int c = in.peek();
    if (c == EOF) throw IoError("truncated PNM header: " + path);
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    break;
  }
  int value = 0;
  if (!(in >> value)) throw IoError("bad PNM header: " + path);
  return value;
}

} // namespace

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());

  char magic[2] = {0, 0};
  in.read(magic, 2);
  int channels;
  if (magic[0] == 'P' && magic[1] == '6') {
    channels = 3;
  } else if (magic[0] == 'P' && magic[1] == '5') {
    channels = 1;
  } else {
    throw IoError("unsupported image format (want P5/P6): " + path.string());
  }

  const int w = next_header_int(in, path.string());
  const int h = next_header_int(in, path.string());
  const int maxval = next_header_int(in, path.string());
  if (w <= 0 || h <= 0) throw IoError("bad image dimensions: " + path.string());
  if (maxval != 255) throw IoError("only maxval 255 supported: " + path.string());
  in.get(); // single whitespace byte after the header

  Image img(w, h, channels);
  in.read(reinterpret_cast<char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
    throw IoError("truncated image payload: " + path.string());
  return img;
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3)
    throw IoError("PNM supports 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image: " + path.string());
  out << (img.channels == 3 ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  if (!out) throw IoError("failed writing image: " + path.string());
}

} // namespace lmkit
