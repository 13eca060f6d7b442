#include "dcre/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>

#include "dcre/error.hpp"
#include "dcre/io.hpp"

namespace dcre {

namespace {

constexpr char kMagic[8] = {'D', 'C', 'R', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError(source_ + ": truncated checkpoint");
  }
  const std::string& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

const Matrix& find(const std::vector<NamedTensor>& tensors, const std::string& name) {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw DataError("checkpoint is missing tensor '" + name + "'");
}

}  // namespace

std::string serialize_tensors(const std::vector<NamedTensor>& tensors) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put<std::uint64_t>(out, t.value.rows());
    put<std::uint64_t>(out, t.value.cols());
    for (double v : t.value.values()) put<double>(out, v);
  }
  return out;
}

std::vector<NamedTensor> deserialize_tensors(const std::string& bytes, const std::string& source) {
  Reader in(bytes, source);
  if (in.get_string(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw DataError(source + ": not a checkpoint file");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) {
    throw DataError(source + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = in.get<std::uint32_t>();
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = in.get_string(in.get<std::uint32_t>());
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    std::vector<double> data(rows * cols);
    for (double& v : data) v = in.get<double>();
    t.value = Matrix(rows, cols, std::move(data));
    tensors.push_back(std::move(t));
  }
  if (!in.done()) throw DataError(source + ": trailing bytes after checkpoint");
  return tensors;
}

void save_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  write_file(path, serialize_tensors(tensors));
}

std::vector<NamedTensor> load_tensors(const std::filesystem::path& path) {
  return deserialize_tensors(read_file(path), path.string());
}

std::vector<NamedTensor> model_tensors(const ModelParams& p) {
  return {
      {"encoder.window", Matrix(1, 1, static_cast<double>(p.encoder.window))},
      {"encoder.word_emb", p.encoder.word_emb},
      {"encoder.pos_emb1", p.encoder.pos_emb1},
      {"encoder.pos_emb2", p.encoder.pos_emb2},
      {"encoder.conv_filter", p.encoder.conv_filter},
      {"encoder.conv_bias", p.encoder.conv_bias},
      {"relation", p.relation},
      {"relation_bias", p.relation_bias},
  };
}

ModelParams model_from_tensors(const std::vector<NamedTensor>& tensors) {
  ModelParams p;
  p.encoder.window = static_cast<int>(find(tensors, "encoder.window")(0, 0));
  p.encoder.word_emb = find(tensors, "encoder.word_emb");
  p.encoder.pos_emb1 = find(tensors, "encoder.pos_emb1");
  p.encoder.pos_emb2 = find(tensors, "encoder.pos_emb2");
  p.encoder.conv_filter = find(tensors, "encoder.conv_filter");
  p.encoder.conv_bias = find(tensors, "encoder.conv_bias");
  p.relation = find(tensors, "relation");
  p.relation_bias = find(tensors, "relation_bias");
  if (p.relation.cols() != static_cast<std::size_t>(p.encoder.rep_dim())) {
    throw DataError("checkpoint: relation matrix width does not match encoder output");
  }
  return p;
}

void save_model(const std::filesystem::path& path, const ModelParams& params) {
  save_tensors(path, model_tensors(params));
}

ModelParams load_model(const std::filesystem::path& path) {
  return model_from_tensors(load_tensors(path));
}

}  // namespace dcre
