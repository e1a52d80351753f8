#ifndef MAXMIN_MAXMIN_HPP
#define MAXMIN_MAXMIN_HPP

// io.hpp is left out: it needs OpenSSL and the JSON header.
#include "maxmin/ascent.hpp"
#include "maxmin/construct.hpp"
#include "maxmin/contour.hpp"
#include "maxmin/equilibrium.hpp"
#include "maxmin/error.hpp"
#include "maxmin/field.hpp"
#include "maxmin/grid.hpp"
#include "maxmin/membership.hpp"
#include "maxmin/polynomial.hpp"
#include "maxmin/quaddiff.hpp"
#include "maxmin/spectral.hpp"
#include "maxmin/topology.hpp"
#include "maxmin/variation.hpp"

#endif
