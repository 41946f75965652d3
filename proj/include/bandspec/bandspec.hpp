#pragma once

/// @file
/// Umbrella header for the bandspec library.

#include "bandspec/errors.hpp"
#include "bandspec/sequence.hpp"
#include "bandspec/model.hpp"
#include "bandspec/cutoff.hpp"
#include "bandspec/parallel.hpp"
#include "bandspec/band_matrix.hpp"
#include "bandspec/eigensolver.hpp"
#include "bandspec/dense.hpp"
#include "bandspec/hypotheses.hpp"
#include "bandspec/enclosure.hpp"
#include "bandspec/certificate.hpp"
#include "bandspec/conjugation.hpp"
#include "bandspec/asymptotics.hpp"
