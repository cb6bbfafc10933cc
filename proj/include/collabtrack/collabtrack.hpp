#ifndef COLLABTRACK_COLLABTRACK_HPP_
#define COLLABTRACK_COLLABTRACK_HPP_

#include "annotations.hpp"
#include "box.hpp"
#include "errors.hpp"
#include "eval.hpp"
#include "filter.hpp"
#include "imagery.hpp"
#include "model_io.hpp"
#include "network.hpp"
#include "sampling.hpp"
#include "subspace.hpp"
#include "synth.hpp"
#include "tracker.hpp"

#endif  // COLLABTRACK_COLLABTRACK_HPP_
