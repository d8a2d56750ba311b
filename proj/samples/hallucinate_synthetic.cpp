// End-to-end library walkthrough: generate synthetic aligned faces, train a
// model, hallucinate a held-out face from its 16x16 version and write the
// comparison strip.
//
//   hallucinate_synthetic [out_dir] [training_images]

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <vector>

#include "facehal/facehal.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : "sample_output";
  const std::size_t n_train = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 60;

  try {
    facehal::SyntheticFaceGenerator gen(7);
    const std::vector<facehal::Image> train_set = gen.generate(n_train);
    const facehal::Image truth = gen.next();

    facehal::PipelineConfig cfg;
    const facehal::PipelineModel model = facehal::train(train_set, cfg);

    const facehal::Image lr = cfg.degradation().apply(truth);
    const facehal::Hallucination h = facehal::hallucinate(model, lr);
    const facehal::Image bicubic = facehal::bicubic_resize(lr, truth.width(), truth.height());

    std::cout << std::fixed << std::setprecision(2);
    std::cout << "bicubic  " << facehal::psnr(bicubic, truth) << " dB\n";
    for (std::size_t s = 0; s < h.intermediates.steps.size(); ++s) {
      std::cout << (s == 0 ? "step1    " : "layer" + std::to_string(s) + "   ")
                << facehal::psnr(h.intermediates.steps[s], truth) << " dB\n";
    }

    std::vector<facehal::Image> strip{bicubic};
    strip.insert(strip.end(), h.intermediates.steps.begin(), h.intermediates.steps.end());
    strip.push_back(truth);
    std::filesystem::create_directories(out);
    facehal::save_image(lr, out / "input_16x16.png");
    facehal::save_image(h.output, out / "hallucinated.png");
    facehal::save_image(facehal::hconcat(strip), out / "steps.png");
    std::cout << "wrote " << (out / "steps.png").string() << '\n';
  } catch (const facehal::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
