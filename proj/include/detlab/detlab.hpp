#pragma once

#include "detlab/geometry.hpp"
#include "detlab/wavefunction.hpp"
#include "detlab/tridiagonal.hpp"
#include "detlab/hamiltonian.hpp"
#include "detlab/record.hpp"
#include "detlab/propagator.hpp"
#include "detlab/detection.hpp"
#include "detlab/energy.hpp"
#include "detlab/operator_lab.hpp"
#include "detlab/dilation.hpp"
#include "detlab/config.hpp"
#include "detlab/experiment.hpp"
#include "detlab/report_io.hpp"
#include "detlab/sweep.hpp"
#include "detlab/search.hpp"
#include "detlab/lab_checks.hpp"
