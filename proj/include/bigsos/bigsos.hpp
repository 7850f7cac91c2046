#pragma once

#include "bigsos/base_streams.hpp"
#include "bigsos/behavior.hpp"
#include "bigsos/checks.hpp"
#include "bigsos/dsl.hpp"
#include "bigsos/errors.hpp"
#include "bigsos/format.hpp"
#include "bigsos/lts_engine.hpp"
#include "bigsos/qm.hpp"
#include "bigsos/reduction.hpp"
#include "bigsos/rho.hpp"
#include "bigsos/rules.hpp"
#include "bigsos/stream_engine.hpp"
#include "bigsos/terms.hpp"
#include "bigsos/verdict.hpp"
