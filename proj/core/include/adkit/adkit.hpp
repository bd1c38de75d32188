#pragma once

#include "adkit/backend.hpp"
#include "adkit/context.hpp"
#include "adkit/dual.hpp"
#include "adkit/errors.hpp"
#include "adkit/fallbacks.hpp"
#include "adkit/finite_diff.hpp"
#include "adkit/forward.hpp"
#include "adkit/function.hpp"
#include "adkit/matrix.hpp"
#include "adkit/operators.hpp"
#include "adkit/plan.hpp"
#include "adkit/preparation.hpp"
#include "adkit/primitives.hpp"
#include "adkit/reverse.hpp"
#include "adkit/sparse.hpp"
#include "adkit/tape.hpp"
#include "adkit/tracer.hpp"
