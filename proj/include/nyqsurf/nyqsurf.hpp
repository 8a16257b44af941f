#pragma once

#include "nyqsurf/adaptation.hpp"
#include "nyqsurf/attention.hpp"
#include "nyqsurf/camera.hpp"
#include "nyqsurf/fit.hpp"
#include "nyqsurf/image.hpp"
#include "nyqsurf/losses.hpp"
#include "nyqsurf/nyquist.hpp"
#include "nyqsurf/pipeline.hpp"
#include "nyqsurf/render.hpp"
#include "nyqsurf/scene.hpp"
#include "nyqsurf/surfel.hpp"
#include "nyqsurf/synth.hpp"
#include "nyqsurf/io/config.hpp"
#include "nyqsurf/io/netpbm.hpp"
#include "nyqsurf/io/ply.hpp"
#include "nyqsurf/io/report.hpp"
#include "nyqsurf/io/scene_io.hpp"
#include "nyqsurf/io/weights.hpp"
