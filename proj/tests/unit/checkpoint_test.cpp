#include <gtest/gtest.h>

#include <filesystem>

#include "dcre/checkpoint.hpp"
#include "dcre/io.hpp"
#include "helpers.hpp"

namespace dcre {
namespace {

using testing::model_tensors_of;
using testing::tiny_shape;

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / ("dcre_ckpt_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(Checkpoint, TensorRoundTripIsExact) {
  const std::vector<NamedTensor> ts{{"a", Matrix::from_rows({{1.5, -0.0}, {1e-300, 3.0}})},
                                    {"empty", Matrix(0, 4)},
                                    {"b", Matrix::from_rows({{0.1}})}};
  const std::string bytes = serialize_tensors(ts);
  EXPECT_EQ(bytes.substr(0, 8), "DCRECKPT");
  const auto back = deserialize_tensors(bytes, "mem");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    EXPECT_EQ(back[i].name, ts[i].name);
    EXPECT_EQ(back[i].value, ts[i].value);
  }
  EXPECT_EQ(serialize_tensors(back), bytes);
}

TEST(Checkpoint, CorruptInputIsRejected) {
  const std::string bytes = serialize_tensors({{"a", Matrix(2, 2, 1.0)}});
  EXPECT_THROW(deserialize_tensors("NOTACKPT", "mem"), DataError);
  EXPECT_THROW(deserialize_tensors(bytes.substr(0, bytes.size() - 3), "mem"), DataError);
  EXPECT_THROW(deserialize_tensors(bytes + "x", "mem"), DataError);
  std::string wrong_version = bytes;
  wrong_version[8] = 99;
  EXPECT_THROW(deserialize_tensors(wrong_version, "mem"), DataError);
}

TEST(Checkpoint, ModelRoundTripThroughFile) {
  Rng rng(3);
  const auto params = init_model(tiny_shape(), 5, rng);
  const auto path = temp_dir() / "model.ckpt";
  save_model(path, params);
  const auto loaded = load_model(path);
  EXPECT_EQ(model_tensors_of(loaded), model_tensors_of(params));
  EXPECT_EQ(loaded.encoder.window, params.encoder.window);
  const std::string first = read_file(path);
  save_model(path, loaded);
  EXPECT_EQ(read_file(path), first);
  std::filesystem::remove_all(path.parent_path());
}

TEST(Checkpoint, MissingTensorIsReported) {
  Rng rng(4);
  auto tensors = model_tensors(init_model(tiny_shape(), 3, rng));
  tensors.pop_back();
  try {
    model_from_tensors(tensors);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("missing tensor"), std::string::npos);
  }
}

}  // namespace
}  // namespace dcre
