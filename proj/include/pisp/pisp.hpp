// SPDX-License-Identifier: Apache-2.0
//! \file pisp.hpp
//! Umbrella header.
#pragma once

#include "core.hpp"
#include "quadrature.hpp"
#include "geometry.hpp"
#include "phantom.hpp"
#include "forward.hpp"
#include "raytrace.hpp"
#include "extract.hpp"
#include "observables.hpp"
#include "volume.hpp"
#include "fft.hpp"
#include "radon.hpp"
#include "spline.hpp"
#include "abelgeo.hpp"
#include "elliptic.hpp"
#include "io.hpp"
#include "config.hpp"
#include "pipeline.hpp"
