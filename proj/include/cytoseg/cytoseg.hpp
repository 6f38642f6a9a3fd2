#pragma once

#include "cytoseg/error.hpp"
#include "cytoseg/raster.hpp"
#include "cytoseg/image_io.hpp"
#include "cytoseg/preprocess.hpp"
#include "cytoseg/morphology.hpp"
#include "cytoseg/thresholding.hpp"
#include "cytoseg/levelset.hpp"
#include "cytoseg/pipeline.hpp"
#include "cytoseg/metrics.hpp"
#include "cytoseg/phantom.hpp"
#include "cytoseg/config.hpp"
#include "cytoseg/mask_directory.hpp"
#include "cytoseg/cli.hpp"
