#include "certfair/checkpoint.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace certfair {
namespace {

constexpr char kTextMagic[] = "certfair-checkpoint";
constexpr std::array<char, 4> kBinaryMagic = {'C', 'F', 'C', 'K'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename Fn>
void for_each_value(const Parameters& params, Fn&& fn) {
  for (const auto& layer : params.layers) {
    for (double v : layer.weights) fn(v);
  }
  for (const auto& layer : params.layers) {
    for (double v : layer.bias) fn(v);
  }
}

template <typename Fn>
void fill_values(Parameters& params, Fn&& next) {
  for (auto& layer : params.layers) {
    for (double& v : layer.weights) v = next();
  }
  for (auto& layer : params.layers) {
    for (double& v : layer.bias) v = next();
  }
}

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFFu));
  }
}

template <typename T>
T get_le(std::istream& in) {
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int byte = in.get();
    if (byte == std::char_traits<char>::eof()) throw CheckpointError("truncated binary checkpoint");
    value |= static_cast<std::uint64_t>(static_cast<unsigned char>(byte)) << (8 * i);
  }
  return static_cast<T>(value);
}

void write_text(std::ostream& out, const Checkpoint& ckpt) {
  const auto& spec = ckpt.spec;
  out << kTextMagic << ' ' << kFormatVersion << '\n';
  out << "layers";
  for (auto w : spec.layer_sizes) out << ' ' << w;
  out << '\n';
  out << "activation relu\n";
  out << "sensitive " << spec.sensitive.offset << ' ' << spec.sensitive.width << ' '
      << to_string(spec.sensitive.encoding) << '\n';
  out << "version " << ckpt.params.version << '\n';
  out << std::setprecision(17);
  for_each_value(ckpt.params, [&](double v) { out << v << '\n'; });
}

void write_binary(std::ostream& out, const Checkpoint& ckpt) {
  const auto& spec = ckpt.spec;
  out.write(kBinaryMagic.data(), kBinaryMagic.size());
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.layer_sizes.size()));
  for (auto w : spec.layer_sizes) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w));
  put_le<std::uint8_t>(out, 0);  // relu
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.sensitive.offset));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.sensitive.width));
  put_le<std::uint8_t>(out, spec.sensitive.encoding == SensitiveEncoding::kOneHot ? 0 : 1);
  put_le<std::uint64_t>(out, ckpt.params.version);
  for_each_value(ckpt.params,
                 [&](double v) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v)); });
}

std::string expect_line(std::istream& in, const char* key) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') break;
  }
  std::istringstream fields(line);
  std::string head;
  fields >> head;
  if (head != key) {
    throw CheckpointError(std::string("checkpoint header: expected '") + key + "', found '" +
                          head + "'");
  }
  std::string rest;
  std::getline(fields, rest);
  return rest;
}

Checkpoint read_text(std::istream& in) {
  Checkpoint ckpt;
  {
    std::istringstream fields(expect_line(in, kTextMagic));
    std::uint32_t version = 0;
    if (!(fields >> version) || version != kFormatVersion) {
      throw CheckpointError("unsupported checkpoint format version");
    }
  }
  {
    std::istringstream fields(expect_line(in, "layers"));
    std::size_t w = 0;
    while (fields >> w) ckpt.spec.layer_sizes.push_back(w);
  }
  {
    std::istringstream fields(expect_line(in, "activation"));
    std::string tag;
    fields >> tag;
    if (tag != "relu") throw CheckpointError("unsupported activation '" + tag + "'");
  }
  {
    std::istringstream fields(expect_line(in, "sensitive"));
    std::string encoding;
    if (!(fields >> ckpt.spec.sensitive.offset >> ckpt.spec.sensitive.width >> encoding)) {
      throw CheckpointError("malformed sensitive slice line");
    }
    ckpt.spec.sensitive.encoding = parse_encoding(encoding);
  }
  {
    std::istringstream fields(expect_line(in, "version"));
    if (!(fields >> ckpt.params.version)) throw CheckpointError("malformed version line");
  }
  try {
    ckpt.spec.validate();
  } catch (const ShapeError& e) {
    throw CheckpointError(std::string("invalid network in checkpoint: ") + e.what());
  }
  const auto version = ckpt.params.version;
  ckpt.params = make_parameters(ckpt.spec);
  ckpt.params.version = version;
  fill_values(ckpt.params, [&]() {
    std::string token;
    while (in >> token) {
      if (token[0] != '#') break;
      std::getline(in, token);
      token.clear();
    }
    if (token.empty()) throw CheckpointError("checkpoint ends before all parameters were read");
    // from_chars keeps subnormals that stod reports as out of range.
    double v = 0.0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || end != token.data() + token.size()) throw CheckpointError("unparseable parameter value '" + token + "'");
    return v;
  });
  std::string extra;
  if (in >> extra) throw CheckpointError("trailing data after checkpoint parameters");
  return ckpt;
}

Checkpoint read_binary(std::istream& in) {
  Checkpoint ckpt;
  if (get_le<std::uint32_t>(in) != kFormatVersion) {
    throw CheckpointError("unsupported checkpoint format version");
  }
  const auto n = get_le<std::uint32_t>(in);
  if (n > 1024) throw CheckpointError("implausible layer count in checkpoint");
  for (std::uint32_t i = 0; i < n; ++i) ckpt.spec.layer_sizes.push_back(get_le<std::uint32_t>(in));
  if (get_le<std::uint8_t>(in) != 0) throw CheckpointError("unsupported activation tag");
  ckpt.spec.sensitive.offset = get_le<std::uint32_t>(in);
  ckpt.spec.sensitive.width = get_le<std::uint32_t>(in);
  const auto encoding = get_le<std::uint8_t>(in);
  if (encoding > 1) throw CheckpointError("unknown sensitive encoding tag");
  ckpt.spec.sensitive.encoding =
      encoding == 0 ? SensitiveEncoding::kOneHot : SensitiveEncoding::kSignedBinary;
  const auto version = get_le<std::uint64_t>(in);
  try {
    ckpt.spec.validate();
  } catch (const ShapeError& e) {
    throw CheckpointError(std::string("invalid network in checkpoint: ") + e.what());
  }
  ckpt.params = make_parameters(ckpt.spec);
  ckpt.params.version = version;
  fill_values(ckpt.params,
              [&]() { return std::bit_cast<double>(get_le<std::uint64_t>(in)); });
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CheckpointError("trailing data after checkpoint parameters");
  }
  return ckpt;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt, CheckpointFormat format) {
  check_shapes(ckpt.spec, ckpt.params);
  if (format == CheckpointFormat::kText) {
    write_text(out, ckpt);
  } else {
    write_binary(out, ckpt);
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt,
                     CheckpointFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, ckpt, format);
  if (!out) throw CheckpointError("failed writing '" + path.string() + "'");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() == 4 && magic == kBinaryMagic) {
    auto ckpt = read_binary(in);
    if (!ckpt.params.all_finite()) throw CheckpointError("checkpoint holds non-finite values");
    return ckpt;
  }
  in.clear();
  in.seekg(0);
  auto ckpt = read_text(in);
  if (!ckpt.params.all_finite()) throw CheckpointError("checkpoint holds non-finite values");
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace certfair
