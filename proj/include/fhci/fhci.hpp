#pragma once

#include "fhci/error.hpp"
#include "fhci/normal.hpp"
#include "fhci/dataset.hpp"
#include "fhci/regression.hpp"
#include "fhci/likelihood.hpp"
#include "fhci/root_finding.hpp"
#include "fhci/estimation.hpp"
#include "fhci/intervals.hpp"
#include "fhci/coverage.hpp"
#include "fhci/mse.hpp"
#include "fhci/rng.hpp"
#include "fhci/parallel.hpp"
#include "fhci/csv.hpp"
#include "fhci/simulation.hpp"
