#pragma once

#include "volcheck/baseline.hpp"
#include "volcheck/bootstrap.hpp"
#include "volcheck/calibration.hpp"
#include "volcheck/config.hpp"
#include "volcheck/errors.hpp"
#include "volcheck/functions.hpp"
#include "volcheck/gof_abs.hpp"
#include "volcheck/gof_linear.hpp"
#include "volcheck/gof_nonlinear.hpp"
#include "volcheck/kernel.hpp"
#include "volcheck/optimize.hpp"
#include "volcheck/parallel.hpp"
#include "volcheck/preavg.hpp"
#include "volcheck/process.hpp"
#include "volcheck/projection.hpp"
#include "volcheck/report.hpp"
#include "volcheck/simulate.hpp"
#include "volcheck/study.hpp"
