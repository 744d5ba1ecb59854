#pragma once

#include "flagsphere/analysis.hpp"
#include "flagsphere/chart.hpp"
#include "flagsphere/counterexample.hpp"
#include "flagsphere/errors.hpp"
#include "flagsphere/flow.hpp"
#include "flagsphere/jacobi.hpp"
#include "flagsphere/metric.hpp"
#include "flagsphere/models.hpp"
#include "flagsphere/perturbation.hpp"
#include "flagsphere/spectrum.hpp"
