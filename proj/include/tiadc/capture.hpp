#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tiadc/config.hpp"

namespace tiadc {

/// An interleaved sample record y[n] together with its acquisition setup.
struct Capture {
    std::vector<double> samples;
    TiadcConfig config;
    bool corrected = false;
    std::string bank_id;
    /// samples at each end of the record that are filter start-up/run-out
    std::size_t transient_samples = 0;

    std::size_t size() const { return samples.size(); }
    double fs() const { return config.fs; }

    void validate() const {
        config.validate();
        require(!samples.empty(), "capture is empty");
        for (double v : samples) require(std::isfinite(v), "capture contains non-finite samples");
    }
};

} // namespace tiadc
