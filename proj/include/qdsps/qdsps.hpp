#pragma once

#include "qdsps/units.hpp"
#include "qdsps/error.hpp"
#include "qdsps/fft.hpp"
#include "qdsps/grid.hpp"
#include "qdsps/pulses.hpp"
#include "qdsps/spectrum.hpp"
#include "qdsps/phonon.hpp"
#include "qdsps/channels.hpp"
#include "qdsps/stepping.hpp"
#include "qdsps/master_equation.hpp"
#include "qdsps/fom.hpp"
#include "qdsps/correlations.hpp"
#include "qdsps/trajectory.hpp"
#include "qdsps/ensemble.hpp"
#include "qdsps/config.hpp"
#include "qdsps/pipeline.hpp"
#include "qdsps/io.hpp"
