#pragma once

#include "app.hpp"
#include "core.hpp"
#include "error.hpp"
#include "integrator.hpp"
#include "lockin.hpp"
#include "oracle.hpp"
#include "root_finding.hpp"
#include "stability.hpp"
#include "trajectory_io.hpp"
