// Reader for the IDX image/label container (the MNIST file format).
#pragma once

#include <string>
#include <vector>

namespace dpcnn {

struct IdxImages {
  int count = 0, h = 0, w = 0;
  std::vector<double> pixels;  // count*h*w, normalized to [0, 1]
};

IdxImages load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);

}  // namespace dpcnn
