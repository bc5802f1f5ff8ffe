// Writes the synthetic 28x28 row-sequence model and a stroke-image dataset
// (IDX) into a directory, for trying the CLI without a trained network.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "covrnn/dataset.hpp"
#include "covrnn/model.hpp"
#include "covrnn/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic row-model fixture"};
  std::string dir = "fixture";
  std::size_t count = 500;
  std::uint64_t model_seed = 7;
  std::uint64_t data_seed = 11;
  app.add_option("dir", dir, "Output directory")->capture_default_str();
  app.add_option("--count", count, "Number of images")->capture_default_str();
  app.add_option("--model_seed", model_seed)->capture_default_str();
  app.add_option("--data_seed", data_seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(dir);
    const std::filesystem::path out = dir;
    covrnn::save_model(covrnn::synthetic::row_model(model_seed), out / "row_model.json");
    std::vector<unsigned char> labels;
    const auto images = covrnn::synthetic::stroke_images(count, data_seed, labels);
    covrnn::write_idx_images(out / "images.idx3-ubyte", 28, 28, images);
    covrnn::write_idx_labels(out / "labels.idx1-ubyte", labels);
    std::cout << "wrote " << (out / "row_model.json").string() << " and " << count << " images\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
