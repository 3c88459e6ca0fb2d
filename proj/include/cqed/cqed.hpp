#pragma once

#include "cqed/error.hpp"
#include "cqed/linalg.hpp"
#include "cqed/hilbert.hpp"
#include "cqed/states.hpp"
#include "cqed/model.hpp"
#include "cqed/rng.hpp"
#include "cqed/trajectory.hpp"
#include "cqed/measures.hpp"
#include "cqed/weakfield.hpp"
#include "cqed/steadystate.hpp"
#include "cqed/ensemble.hpp"
#include "cqed/scenario.hpp"
