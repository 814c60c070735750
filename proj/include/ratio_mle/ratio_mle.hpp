#pragma once

#include "ratio_mle/bound_checks.hpp"
#include "ratio_mle/consistency.hpp"
#include "ratio_mle/constraints.hpp"
#include "ratio_mle/distance.hpp"
#include "ratio_mle/errors.hpp"
#include "ratio_mle/estimator.hpp"
#include "ratio_mle/families.hpp"
#include "ratio_mle/io.hpp"
#include "ratio_mle/mixture.hpp"
#include "ratio_mle/parallel.hpp"
#include "ratio_mle/pathology.hpp"
#include "ratio_mle/report.hpp"
#include "ratio_mle/rng.hpp"
#include "ratio_mle/version.hpp"
