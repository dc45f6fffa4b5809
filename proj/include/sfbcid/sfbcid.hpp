#pragma once

#include "sfbcid/types.hpp"
#include "sfbcid/random.hpp"
#include "sfbcid/codebook.hpp"
#include "sfbcid/waveform.hpp"
#include "sfbcid/rmt.hpp"
#include "sfbcid/subspace.hpp"
#include "sfbcid/classifier.hpp"
#include "sfbcid/iq_capture.hpp"
#include "sfbcid/harness.hpp"
