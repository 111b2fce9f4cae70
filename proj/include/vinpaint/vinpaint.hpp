#pragma once

// Umbrella header: two-stage video inpainting (3D structure network + 2D
// detail network with guidance fusion), training and inference.

#include "vinpaint/core/errors.hpp"
#include "vinpaint/core/tensor.hpp"
#include "vinpaint/core/volume.hpp"
#include "vinpaint/data/pipeline.hpp"
#include "vinpaint/data/sample_io.hpp"
#include "vinpaint/infer/inpaint.hpp"
#include "vinpaint/models/combcn.hpp"
#include "vinpaint/models/completion_model.hpp"
#include "vinpaint/models/net3d.hpp"
#include "vinpaint/nn/conv.hpp"
#include "vinpaint/nn/layer.hpp"
#include "vinpaint/nn/layer_spec.hpp"
#include "vinpaint/nn/network.hpp"
#include "vinpaint/nn/params.hpp"
#include "vinpaint/train/adam.hpp"
#include "vinpaint/train/checkpoint.hpp"
#include "vinpaint/train/config.hpp"
#include "vinpaint/train/losses.hpp"
#include "vinpaint/train/trainer.hpp"
