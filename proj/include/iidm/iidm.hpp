#pragma once

// Umbrella header for the full library.

#include "iidm/rng.hpp"
#include "iidm/tensor.hpp"
#include "iidm/schedule.hpp"
#include "iidm/image.hpp"
#include "iidm/image_io.hpp"
#include "iidm/latent.hpp"
#include "iidm/denoiser.hpp"
#include "iidm/diffusion.hpp"
#include "iidm/training.hpp"
#include "iidm/metrics.hpp"
#include "iidm/weights.hpp"
#include "iidm/pipeline.hpp"
#include "iidm/manifest.hpp"
#include "iidm/toy.hpp"
