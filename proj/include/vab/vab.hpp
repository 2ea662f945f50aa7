#pragma once

// Umbrella header: joint lossy compression and clustering with a
// Bernoulli-latent variational autoencoder under a Bernoulli-mixture prior,
// plus classical baselines and evaluation metrics.

#include "vab/baselines.hpp"
#include "vab/codec.hpp"
#include "vab/config.hpp"
#include "vab/data.hpp"
#include "vab/diffcore.hpp"
#include "vab/error.hpp"
#include "vab/linalg.hpp"
#include "vab/metrics.hpp"
#include "vab/model.hpp"
#include "vab/report.hpp"
#include "vab/sampling.hpp"
#include "vab/tensor.hpp"
#include "vab/trainer.hpp"
