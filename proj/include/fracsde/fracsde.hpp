#pragma once

#include "fracsde/core/quadrature.hpp"
#include "fracsde/core/rng.hpp"
#include "fracsde/core/stats.hpp"
#include "fracsde/fbm/cache_io.hpp"
#include "fracsde/fbm/ensemble.hpp"
#include "fracsde/fbm/generators.hpp"
#include "fracsde/fbm/hurst_grid.hpp"
#include "fracsde/fbm/kernel.hpp"
#include "fracsde/frac/grid_function.hpp"
#include "fracsde/frac/operators.hpp"
#include "fracsde/frac/riemann_liouville.hpp"
#include "fracsde/girsanov/girsanov.hpp"
#include "fracsde/drift/convergence.hpp"
#include "fracsde/drift/euler.hpp"
#include "fracsde/drift/field.hpp"
#include "fracsde/drift/jacobian.hpp"
#include "fracsde/drift/norms.hpp"
#include "fracsde/regimes/regimes.hpp"
#include "fracsde/verify/identities.hpp"
#include "fracsde/verify/compactness.hpp"
#include "fracsde/verify/density.hpp"
#include "fracsde/verify/flow.hpp"
#include "fracsde/verify/result.hpp"
#include "fracsde/io/config.hpp"
#include "fracsde/io/executor.hpp"
#include "fracsde/io/mc.hpp"
#include "fracsde/io/run.hpp"
