#pragma once

#include "somd/harness/config.hpp"
#include "somd/harness/experiment.hpp"
#include "somd/harness/report.hpp"
#include "somd/harness/sweep.hpp"
