#include "genrec/weights_io.hpp"

#include <fstream>
#include <sstream>

#include "genrec/text_format.hpp"

namespace genrec {

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::identity: return "identity";
    case ActivationKind::relu: return "relu";
    case ActivationKind::leaky_relu: return "leaky_relu";
  }
  return "identity";
}

ActivationKind parse_activation_kind(std::string_view name) {
  if (name == "identity") return ActivationKind::identity;
  if (name == "relu") return ActivationKind::relu;
  if (name == "leaky_relu" || name == "leaky") return ActivationKind::leaky_relu;
  throw InvalidInput("unknown activation '" + std::string(name) + "'");
}

void save_weights(std::ostream& os, const GeneratorNet& net) {
  const auto act = net.uniform_activation();
  if (!act) throw UnsupportedOperation("save_weights: mixed activations cannot be stored");
  os << "GENREC v1 d=" << net.depth() << " act=" << to_string(act->kind)
     << " h=" << format_real(act->leak) << '\n';
  for (std::size_t i = 0; i < net.depth(); ++i) {
    const auto& L = net.layers()[i];
    os << "layer " << (i + 1) << ' ' << L.weight.rows() << ' ' << L.weight.cols() << '\n';
    write_matrix_rows(os, L.weight);
    write_row(os, L.bias.data(), L.bias.size());
  }
}

std::string weights_to_string(const GeneratorNet& net) {
  std::ostringstream os;
  save_weights(os, net);
  return os.str();
}

void save_weights_file(const std::filesystem::path& path, const GeneratorNet& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  save_weights(os, net);
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

GeneratorNet load_weights(std::istream& is) {
  TokenReader in(is);
  in.expect("GENREC");
  in.expect("v1");
  const std::string d_text = keyed_value(in.next("d="), "d");
  const std::string act_text = keyed_value(in.next("act="), "act");
  const double h = parse_real(keyed_value(in.next("h="), "h"));

  long long depth = 0;
  try {
    depth = std::stoll(d_text);
  } catch (const std::exception&) {
    throw FormatError("header: bad layer count '" + d_text + "'");
  }
  if (depth < 1) throw FormatError("header: layer count must be >= 1");

  Activation act;
  switch (parse_activation_kind(act_text)) {
    case ActivationKind::identity: act = Activation::identity(); break;
    case ActivationKind::relu: act = Activation::relu(); break;
    case ActivationKind::leaky_relu:
      try {
        act = Activation::leaky_relu(h);
      } catch (const InvalidInput&) {
        throw FormatError("header: leaky_relu needs h in (0, 1), got " + format_real(h));
      }
      break;
  }

  std::vector<Layer<double>> layers;
  for (long long i = 1; i <= depth; ++i) {
    const std::string tag = "layer " + std::to_string(i);
    in.expect("layer");
    if (in.read_integer(tag + " index") != i) throw FormatError(tag + ": index out of order");
    const Index rows = in.read_count(tag + " rows");
    const Index cols = in.read_count(tag + " cols");
    if (rows < 1 || cols < 1) throw FormatError(tag + ": empty weight matrix");
    if (!layers.empty() && cols != layers.back().weight.rows())
      throw FormatError(tag + ": dimension chain broken, expected " +
                        std::to_string(layers.back().weight.rows()) + " columns, got " +
                        std::to_string(cols));
    Layer<double> L{Matrix(rows, cols), Vector(rows), act};
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) L.weight(r, c) = in.read_real(tag + " weight");
    for (Index r = 0; r < rows; ++r) L.bias(r) = in.read_real(tag + " bias");
    if (!L.weight.allFinite() || !L.bias.allFinite())
      throw FormatError(tag + ": non-finite parameter");
    layers.push_back(std::move(L));
  }
  if (!in.at_end()) throw FormatError("trailing data after layer " + std::to_string(depth));
  return GeneratorNet(std::move(layers));
}

GeneratorNet load_weights_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  return load_weights(is);
}

}  // namespace genrec
