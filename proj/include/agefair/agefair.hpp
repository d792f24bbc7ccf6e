#pragma once

// Umbrella header: the whole library in one include.

#include "agefair/adam.hpp"
#include "agefair/data.hpp"
#include "agefair/errors.hpp"
#include "agefair/fairness.hpp"
#include "agefair/gradcheck.hpp"
#include "agefair/harness.hpp"
#include "agefair/io_util.hpp"
#include "agefair/layers.hpp"
#include "agefair/losses.hpp"
#include "agefair/models.hpp"
#include "agefair/network.hpp"
#include "agefair/rng.hpp"
#include "agefair/tensor.hpp"
#include "agefair/verify.hpp"
