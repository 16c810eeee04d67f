#pragma once

// GENREC v1 weight files.
//
//   GENREC v1 d=<layers> act=<identity|relu|leaky_relu> h=<real>
//   layer <i> <rows> <cols>
//   <rows lines of cols weights>
//   <rows bias values>
//   ...
//
// Reals use the shortest decimal that round-trips exactly, so load-then-save
// reproduces a file byte for byte.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "genrec/generator.hpp"

namespace genrec {

void save_weights(std::ostream& os, const GeneratorNet& net);
std::string weights_to_string(const GeneratorNet& net);
void save_weights_file(const std::filesystem::path& path, const GeneratorNet& net);

GeneratorNet load_weights(std::istream& is);
GeneratorNet load_weights_file(const std::filesystem::path& path);

}  // namespace genrec
