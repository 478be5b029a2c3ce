// Copyright 2026 The camodet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "camodet/atomic_file.hpp"
#include "camodet/error.hpp"
#include "camodet/image.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using camodet::Image;

TEST_SUITE("io") {

TEST_CASE("png round trip for gray and rgb") {
  fixtures::TempDir dir;
  camodet::Rng rng(31);
  const Image rgb = fixtures::noise_image(37, 23, rng);
  camodet::write_image(rgb, dir / "rgb.png");
  CHECK(camodet::read_image(dir / "rgb.png") == rgb);

  Image gray(19, 5, 1);
  for (auto& b : gray.bytes()) b = static_cast<std::uint8_t>(rng.uniform_index(256));
  camodet::write_image(gray, dir / "gray.png");
  CHECK(camodet::read_image(dir / "gray.png") == gray);
}

TEST_CASE("pnm round trip") {
  fixtures::TempDir dir;
  camodet::Rng rng(32);
  const Image rgb = fixtures::noise_image(8, 9, rng);
  camodet::write_image(rgb, dir / "a.ppm");
  CHECK(camodet::read_image(dir / "a.ppm") == rgb);
  camodet::write_image(rgb, dir / "a.pgm");
  CHECK(camodet::read_image(dir / "a.pgm") == camodet::to_grayscale(rgb));
}

TEST_CASE("image errors") {
  fixtures::TempDir dir;
  fixtures::spit(dir / "bad.png", "not a png at all");
  CHECK_THROWS_AS(camodet::read_image(dir / "bad.png"), camodet::Error);
  CHECK_THROWS_AS(camodet::read_image(dir / "missing.png"), camodet::Error);
  CHECK_THROWS_AS(camodet::write_image(Image(2, 2, 3), dir / "x.bmp"), camodet::Error);
  CHECK_THROWS_AS(Image(2, 2, 2), camodet::Error);
}

TEST_CASE("luma and channel conversion") {
  CHECK(camodet::luma(0, 0, 0) == 0);
  CHECK(camodet::luma(255, 255, 255) == 255);
  Image g(1, 1, 1);
  g.at(0, 0) = 77;
  const Image rgb = camodet::to_rgb(g);
  CHECK(rgb.channels() == 3);
  CHECK(rgb.at(0, 0, 2) == 77);
  CHECK(camodet::to_grayscale(rgb) == g);
}

TEST_CASE("atomic write leaves no temp file and replaces content") {
  fixtures::TempDir dir;
  camodet::write_file_atomic(dir / "f.txt", "one");
  camodet::write_file_atomic(dir / "f.txt", "two");
  CHECK(fixtures::slurp(dir / "f.txt") == "two");
  CHECK_FALSE(std::filesystem::exists(dir / "f.txt.tmp"));
  CHECK_THROWS_AS(camodet::write_file_atomic(dir / "no_such_dir" / "f.txt", "x"), camodet::Error);
}

}  // TEST_SUITE
