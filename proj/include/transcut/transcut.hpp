#pragma once

#include "transcut/energy.hpp"
#include "transcut/errors.hpp"
#include "transcut/eval.hpp"
#include "transcut/features.hpp"
#include "transcut/flo_io.hpp"
#include "transcut/flow.hpp"
#include "transcut/image.hpp"
#include "transcut/jacobi.hpp"
#include "transcut/lightfield.hpp"
#include "transcut/maxflow.hpp"
#include "transcut/pipeline.hpp"
#include "transcut/png_io.hpp"
#include "transcut/synth.hpp"
