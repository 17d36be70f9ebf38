#pragma once

#include "psdpoly/precision.hpp"
#include "psdpoly/matrix.hpp"
#include "psdpoly/matrix_io.hpp"
#include "psdpoly/eigen.hpp"
#include "psdpoly/polynomial.hpp"
#include "psdpoly/remez.hpp"
#include "psdpoly/filter_io.hpp"
#include "psdpoly/refine.hpp"
#include "psdpoly/certificate_io.hpp"
#include "psdpoly/lanczos.hpp"
#include "psdpoly/projection.hpp"
#include "psdpoly/datasets.hpp"
#include "psdpoly/sdp.hpp"
