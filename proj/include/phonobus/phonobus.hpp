#pragma once

#include "phonobus/hilbert.hpp"
#include "phonobus/integrator.hpp"
#include "phonobus/lindblad.hpp"
#include "phonobus/msgate.hpp"
#include "phonobus/nuclear.hpp"
#include "phonobus/parallel.hpp"
#include "phonobus/pitchcatch.hpp"
#include "phonobus/strain.hpp"
#include "phonobus/transduction.hpp"
#include "phonobus/units.hpp"
#include "phonobus/version.hpp"
