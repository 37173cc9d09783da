// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gsrobust/bures.hpp"
#include "gsrobust/cloud.hpp"
#include "gsrobust/dafe.hpp"
#include "gsrobust/ddrop.hpp"
#include "gsrobust/error.hpp"
#include "gsrobust/format.hpp"
#include "gsrobust/geometry.hpp"
#include "gsrobust/imr.hpp"
#include "gsrobust/io/camera.hpp"
#include "gsrobust/io/file.hpp"
#include "gsrobust/io/ply.hpp"
#include "gsrobust/io/raster.hpp"
#include "gsrobust/sampling.hpp"
#include "gsrobust/transport.hpp"
