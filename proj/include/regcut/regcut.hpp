#pragma once

#include "regcut/autodiff.hpp"
#include "regcut/eo.hpp"
#include "regcut/eval.hpp"
#include "regcut/gnn.hpp"
#include "regcut/graph.hpp"
#include "regcut/harness.hpp"
#include "regcut/operators.hpp"
#include "regcut/record.hpp"
#include "regcut/rng.hpp"
#include "regcut/sdp.hpp"
