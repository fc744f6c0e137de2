#include "expomask/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "expomask/error.hpp"

namespace expomask {

namespace {

constexpr const char* kInputChannelsKey = "arch.input_channels";
constexpr const char* kChannelScaleKey = "arch.channel_scale";

void put_le64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double get_le64(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

bool valid_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t') return false;
  }
  return true;
}

[[noreturn]] void format_error(const std::string& what) { throw Error(ErrorCode::kModelFormat, what); }

std::size_t parse_size(const std::string& token) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(token, &pos);
  } catch (const std::exception&) {
    format_error("bad integer '" + token + "'");
  }
  if (pos != token.size()) format_error("bad integer '" + token + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string serialize_model(const UNetParams& params, const std::map<std::string, std::string>& metadata) {
  validate_shapes(params);
  std::map<std::string, std::string> meta = metadata;
  meta[kInputChannelsKey] = std::to_string(params.config.input_channels);
  meta[kChannelScaleKey] = std::to_string(params.config.channel_scale);

  std::string out(kModelMagic);
  out += '\n';
  for (const auto& [key, value] : meta) {
    if (!valid_token(key) || !valid_token(value)) {
      throw Error(ErrorCode::kInvalidArgument, "metadata '" + key + "' must be a non-empty token");
    }
    out += "meta " + key + " " + value + "\n";
  }

  const auto names = tensor_names();
  const auto tensors = params.tensors();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& shape = tensors[i]->shape();
    out += "tensor " + names[i] + " " + std::to_string(shape.size());
    for (auto d : shape) out += " " + std::to_string(d);
    out += " " + std::to_string(offset) + "\n";
    offset += tensors[i]->size() * sizeof(double);
  }
  out += "end " + std::to_string(offset) + "\n";

  out.reserve(out.size() + offset);
  for (const auto* t : tensors) {
    for (double v : t->values()) put_le64(out, v);
  }
  return out;
}

ModelFile deserialize_model(const std::string& bytes, const std::optional<UNetConfig>& expected) {
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) format_error("truncated manifest");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  if (next_line() != kModelMagic) format_error("missing EXPOMASK1 magic");

  std::map<std::string, std::string> meta;
  struct Entry {
    std::string name;
    Shape shape;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  std::size_t payload_bytes = 0;
  for (;;) {
    std::istringstream line(next_line());
    std::string kind;
    line >> kind;
    if (kind == "meta") {
      std::string key, value;
      if (!(line >> key >> value)) format_error("malformed meta line");
      meta[key] = value;
    } else if (kind == "tensor") {
      Entry e;
      std::string rank_tok;
      if (!(line >> e.name >> rank_tok)) format_error("malformed tensor line");
      const std::size_t rank = parse_size(rank_tok);
      if (rank == 0 || rank > 8) format_error("tensor " + e.name + " has bad rank");
      for (std::size_t i = 0; i < rank; ++i) {
        std::string tok;
        if (!(line >> tok)) format_error("tensor " + e.name + " truncated");
        e.shape.push_back(parse_size(tok));
      }
      std::string off_tok;
      if (!(line >> off_tok)) format_error("tensor " + e.name + " has no offset");
      e.offset = parse_size(off_tok);
      entries.push_back(std::move(e));
    } else if (kind == "end") {
      std::string tok;
      if (!(line >> tok)) format_error("malformed end line");
      payload_bytes = parse_size(tok);
      break;
    } else {
      format_error("unknown manifest record '" + kind + "'");
    }
  }
  if (bytes.size() - pos != payload_bytes) format_error("payload size does not match manifest");

  UNetConfig config;
  try {
    config.input_channels = parse_size(meta.at(kInputChannelsKey));
    config.channel_scale = parse_size(meta.at(kChannelScaleKey));
  } catch (const std::out_of_range&) {
    format_error("architecture metadata missing");
  }
  validate(config);
  if (expected && !(*expected == config)) {
    throw Error(ErrorCode::kShapeMismatch, "model architecture does not match the configured network");
  }

  ModelFile file;
  file.params = zero_params(config);
  const auto names = tensor_names();
  auto tensors = file.params.tensors();
  if (entries.size() != tensors.size()) format_error("manifest lists the wrong number of tensors");
  const char* payload = bytes.data() + pos;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& e = entries[i];
    if (e.name != names[i]) format_error("expected tensor " + names[i] + ", found " + e.name);
    if (e.shape != tensors[i]->shape()) {
      throw Error(ErrorCode::kShapeMismatch, e.name + " stored as " + shape_string(e.shape) +
                                                 ", architecture needs " + shape_string(tensors[i]->shape()));
    }
    const std::size_t n = tensors[i]->size();
    if (e.offset % sizeof(double) != 0 || e.offset + n * sizeof(double) > payload_bytes) {
      format_error(e.name + " payload out of range");
    }
    auto values = tensors[i]->values();
    for (std::size_t k = 0; k < n; ++k) values[k] = get_le64(payload + e.offset + k * sizeof(double));
    if (!tensors[i]->all_finite()) format_error(e.name + " contains non-finite values");
  }

  meta.erase(kInputChannelsKey);
  meta.erase(kChannelScaleKey);
  file.metadata = std::move(meta);
  return file;
}

void save_model(const std::filesystem::path& path, const UNetParams& params,
                const std::map<std::string, std::string>& metadata) {
  const std::string bytes = serialize_model(params, metadata);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

ModelFile load_model(const std::filesystem::path& path, const std::optional<UNetConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str(), expected);
}

}  // namespace expomask
