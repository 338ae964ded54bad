#ifndef CONICAM_CONICAM_HPP
#define CONICAM_CONICAM_HPP

#include "conicam/errors.hpp"
#include "conicam/projective.hpp"
#include "conicam/calibration.hpp"
#include "conicam/conformal.hpp"
#include "conicam/homography.hpp"
#include "conicam/odometry.hpp"
#include "conicam/synth.hpp"

#endif  // CONICAM_CONICAM_HPP
