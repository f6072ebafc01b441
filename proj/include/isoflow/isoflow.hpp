#pragma once

#include "isoflow/error.hpp"
#include "isoflow/mesh.hpp"
#include "isoflow/forms.hpp"
#include "isoflow/exact.hpp"
#include "isoflow/moment.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/io.hpp"
#include "isoflow/config.hpp"
