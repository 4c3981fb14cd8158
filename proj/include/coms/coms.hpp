#pragma once

#include "coms/data.hpp"
#include "coms/error.hpp"
#include "coms/eval.hpp"
#include "coms/io.hpp"
#include "coms/nnet.hpp"
#include "coms/rng.hpp"
#include "coms/sampling.hpp"
#include "coms/svg.hpp"
#include "coms/training.hpp"
#include "coms/vec2.hpp"
