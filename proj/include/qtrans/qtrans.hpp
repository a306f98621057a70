// Umbrella header.

#ifndef QTRANS_QTRANS_HPP_
#define QTRANS_QTRANS_HPP_

#include "qtrans/core.hpp"
#include "qtrans/sampled_function.hpp"
#include "qtrans/moduli.hpp"
#include "qtrans/cubesimplex.hpp"
#include "qtrans/entropy.hpp"
#include "qtrans/graph_manifold.hpp"
#include "qtrans/transversal.hpp"
#include "qtrans/sharpness.hpp"
#include "qtrans/functions.hpp"
#include "qtrans/io.hpp"
#include "qtrans/conslaw/flux.hpp"
#include "qtrans/conslaw/mollifier.hpp"
#include "qtrans/conslaw/reconstruct.hpp"
#include "qtrans/conslaw/pipeline.hpp"
#include "qtrans/conslaw/lax_oleinik.hpp"

#endif  // QTRANS_QTRANS_HPP_
