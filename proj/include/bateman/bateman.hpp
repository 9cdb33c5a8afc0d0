#pragma once

#include "bateman/classical.hpp"
#include "bateman/closedform.hpp"
#include "bateman/dirac.hpp"
#include "bateman/error.hpp"
#include "bateman/fock.hpp"
#include "bateman/geometry.hpp"
#include "bateman/model.hpp"
#include "bateman/reduced.hpp"
#include "bateman/timeseries.hpp"
