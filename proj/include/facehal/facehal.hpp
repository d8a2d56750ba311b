#pragma once

#include "facehal/components.hpp"
#include "facehal/config.hpp"
#include "facehal/conjugate_gradient.hpp"
#include "facehal/degradation.hpp"
#include "facehal/denoise.hpp"
#include "facehal/embedding.hpp"
#include "facehal/error.hpp"
#include "facehal/external_denoiser.hpp"
#include "facehal/hash.hpp"
#include "facehal/image.hpp"
#include "facehal/image_io.hpp"
#include "facehal/metrics.hpp"
#include "facehal/parallel.hpp"
#include "facehal/pipeline.hpp"
#include "facehal/red.hpp"
#include "facehal/synthetic_faces.hpp"
