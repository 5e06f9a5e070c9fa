#pragma once

// Everything in one include.
#include "tiadc/errors.hpp"
#include "tiadc/config.hpp"
#include "tiadc/profile.hpp"
#include "tiadc/capture.hpp"
#include "tiadc/model.hpp"
#include "tiadc/window.hpp"
#include "tiadc/fft.hpp"
#include "tiadc/calibration.hpp"
#include "tiadc/filter_design.hpp"
#include "tiadc/correction.hpp"
#include "tiadc/metrics.hpp"
#include "tiadc/synthetic.hpp"
#include "tiadc/io.hpp"
#include "tiadc/pipeline.hpp"
