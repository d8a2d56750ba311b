// Out-of-process denoiser used by the tests. Speaks RDN1 on stdin/stdout.
//   rdn_test_filter identity
//   rdn_test_filter gaussian <spatial std per unit sigma>
//   rdn_test_filter fail | badmagic | truncate | wrongdims | sleep
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <iterator>
#include <string>
#include <thread>
#include <vector>

#include "facehal/external_denoiser.hpp"

namespace {

// Direct 2-D Gaussian convolution with clamped indices; deliberately not
// the separable path the library uses.
facehal::Image reference_gaussian(const facehal::Image& x, double std_px) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * std_px)));
  std::vector<double> k((2 * r + 1) * (2 * r + 1));
  double sum = 0.0;
  for (int v = -r; v <= r; ++v)
    for (int u = -r; u <= r; ++u) {
      const double w = std::exp(-(u * u + v * v) / (2.0 * std_px * std_px));
      k[(v + r) * (2 * r + 1) + (u + r)] = w;
      sum += w;
    }
  facehal::Image out(x.width(), x.height(), x.channels());
  for (int y = 0; y < x.height(); ++y)
    for (int xx = 0; xx < x.width(); ++xx)
      for (int c = 0; c < x.channels(); ++c) {
        double acc = 0.0;
        for (int v = -r; v <= r; ++v)
          for (int u = -r; u <= r; ++u) {
            const int sx = std::clamp(xx + u, 0, x.width() - 1);
            const int sy = std::clamp(y + v, 0, x.height() - 1);
            acc += k[(v + r) * (2 * r + 1) + (u + r)] * x.at(sx, sy, c);
          }
        out.at(xx, y, c) = acc / sum;
      }
  return out;
}

void write_bytes(const std::vector<std::uint8_t>& bytes) {
  std::fwrite(bytes.data(), 1, bytes.size(), stdout);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "identity";
  std::freopen(nullptr, "rb", stdin);
  const std::vector<std::uint8_t> input((std::istreambuf_iterator<char>(std::cin)),
                                        std::istreambuf_iterator<char>());
  if (mode == "fail") {
    std::cerr << "simulated denoiser crash" << std::endl;
    return 1;
  }
  if (mode == "sleep") {
    std::this_thread::sleep_for(std::chrono::seconds(30));
    return 0;
  }
  facehal::rdn::Message msg;
  try {
    msg = facehal::rdn::decode(input);
  } catch (const std::exception& e) {
    std::cerr << e.what() << std::endl;
    return 2;
  }
  std::vector<std::uint8_t> reply;
  if (mode == "identity") {
    reply = input;
  } else if (mode == "gaussian") {
    const double scale = argc > 2 ? std::stod(argv[2]) : 10.0;
    reply = facehal::rdn::encode(reference_gaussian(msg.image, scale * msg.sigma), msg.sigma);
  } else if (mode == "badmagic") {
    reply = input;
    reply[0] = 'X';
  } else if (mode == "truncate") {
    reply.assign(input.begin(), input.begin() + static_cast<std::ptrdiff_t>(input.size() / 2));
  } else if (mode == "wrongdims") {
    const facehal::Image bigger(msg.image.width() + 1, msg.image.height(), msg.image.channels());
    reply = facehal::rdn::encode(bigger, msg.sigma);
  } else {
    std::cerr << "unknown mode " << mode << std::endl;
    return 3;
  }
  write_bytes(reply);
  return 0;
}
